// Copyright 2026 The lateprot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. stdout carries data only; diagnostics go to stderr.
// Exit codes: 0 success, 2 usage/config error, 3 data/IO error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lateprot/error.hpp"
#include "lateprot/evaluator.hpp"
#include "lateprot/io.hpp"
#include "lateprot/kernels.hpp"
#include "lateprot/minhash.hpp"
#include "lateprot/parallel.hpp"
#include "lateprot/scorer.hpp"
#include "lateprot/synthetic.hpp"
#include "lateprot/trainer.hpp"

namespace {

using namespace lateprot;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  int threads = 0;
  std::string kernel = "auto";
};

void apply_common(const Common& c) {
  if (c.threads < 0) throw UsageError("--threads must be >= 0");
  if (c.kernel == "scalar") {
    kernels::set_active(kernels::Isa::kScalar);
  } else if (c.kernel == "avx2") {
    if (!kernels::available(kernels::Isa::kAvx2)) throw UsageError("--kernel avx2 is not supported on this CPU/build");
    kernels::set_active(kernels::Isa::kAvx2);
  }
  set_num_threads(c.threads);
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  cmd->add_option("--kernel", c.kernel, "Inner-product kernels")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
}

EmbeddingSet embed(const HiddenSet& h, const std::optional<ProjectionHead>& head) {
  return head ? project(h, *head) : l2_normalize_rows(h);
}

std::optional<ProjectionHead> load_head(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_head_file(path);
}

// Builds the requested scorer over the database, optionally with one extra
// trailing entry (an external query).
std::unique_ptr<CandidateScorer> make_scorer(const std::string& kind, const Database& db,
                                             const std::optional<ProjectionHead>& head,
                                             std::uint64_t minhash_seed,
                                             const std::optional<ProteinRecord>& extra_record = std::nullopt,
                                             const HiddenSet* extra_hidden = nullptr) {
  if (kind == "minhash") {
    const MinHashScheme scheme(minhash_seed);
    std::vector<NamedSignature> sigs;
    for (const auto& r : db.records) sigs.push_back({r.id, scheme.sign(r.sequence)});
    if (extra_record) sigs.push_back({extra_record->id, scheme.sign(extra_record->sequence)});
    return std::make_unique<MinHashScorer>(std::move(sigs));
  }
  std::vector<EmbeddingSet> sets;
  sets.reserve(db.hidden.size() + 1);
  for (const auto& h : db.hidden) sets.push_back(embed(h, head));
  if (extra_hidden) sets.push_back(embed(*extra_hidden, head));
  if (kind == "pooled") return std::make_unique<PooledScorer>(sets);
  return std::make_unique<MaxSimScorer>(std::move(sets));
}

Database open_db(const std::string& manifest) { return load_database(load_manifest(manifest)); }

// ---------------------------------------------------------------- train

struct TrainArgs {
  Common common;
  std::string pairs, hidden, out_head, log;
  TrainConfig cfg;
  std::size_t dim = kDefaultEmbeddingDim;
};

int run_train(const TrainArgs& a) {
  try {
    validate(a.cfg);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (a.dim == 0) throw UsageError("--dim must be >= 1");
  apply_common(a.common);

  std::map<std::string, std::shared_ptr<const HiddenSet>> by_id;
  for (auto& h : read_hidden_file(a.hidden)) {
    auto id = h.protein_id();
    by_id.emplace(std::move(id), std::make_shared<const HiddenSet>(truncate(h)));
  }
  auto lookup = [&](const std::string& id) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorCode::kUnknownId, "pair references '" + id + "', absent from " + a.hidden);
    return it->second;
  };
  std::vector<TrainPair> pairs;
  for (const auto& p : read_pairs(a.pairs)) pairs.push_back({lookup(p.anchor_id), lookup(p.positive_id), p.group});

  const std::string log_path = a.log.empty() ? a.out_head + ".log" : a.log;
  std::ofstream log(log_path);
  if (!log) fail(ErrorCode::kIo, "cannot open '" + log_path + "'");
  std::cerr << "training on " << pairs.size() << " pairs, D=" << a.dim << ", batch " << a.cfg.batch_size << ", "
            << a.cfg.epochs << " epochs, kernels " << kernels::to_string(kernels::active().isa) << "\n";
  const auto result = train_projection(pairs, a.dim, a.cfg, [&](const StepLog& s) { write_training_log_line(log, s); });
  for (std::size_t e = 0; e < result.epoch_mean_loss.size(); ++e) {
    std::cerr << "epoch " << e << " mean loss " << result.epoch_mean_loss[e] << "\n";
  }
  write_head_file(a.out_head, result.head);
  return 0;
}

// ---------------------------------------------------------------- search

struct SearchArgs {
  Common common;
  std::string db, head, query_id, query_fasta, hidden, scorer = "maxsim";
  std::size_t k = 10;
  std::uint64_t minhash_seed = 0;
};

int run_search(const SearchArgs& a) {
  if (a.query_id.empty() == a.query_fasta.empty()) throw UsageError("give exactly one of --query-id or --query-fasta");
  if (!a.query_fasta.empty() && a.hidden.empty() && a.scorer != "minhash") {
    throw UsageError("--query-fasta needs --hidden for the maxsim and pooled scorers");
  }
  if (a.k == 0) throw UsageError("--k must be >= 1");
  if (a.scorer == "minhash" && !a.head.empty()) throw UsageError("--head does not apply to --scorer minhash");
  apply_common(a.common);

  const Database db = open_db(a.db);
  const auto head = load_head(a.head);
  std::unique_ptr<CandidateScorer> scorer;
  std::size_t query = 0;
  if (!a.query_id.empty()) {
    query = db.index_of(a.query_id);
    scorer = make_scorer(a.scorer, db, head, a.minhash_seed);
  } else {
    const auto fasta = read_fasta(a.query_fasta);
    if (fasta.empty()) fail(ErrorCode::kParseError, "'" + a.query_fasta + "' has no records");
    const ProteinRecord rec{fasta.front().id, fasta.front().sequence, "?"};
    std::optional<HiddenSet> qh;
    if (!a.hidden.empty()) {
      for (auto& h : read_hidden_file(a.hidden)) {
        if (h.protein_id() == rec.id) qh.emplace(truncate(h));
      }
      if (!qh) fail(ErrorCode::kUnknownId, "'" + a.hidden + "' has no residue set for '" + rec.id + "'");
    }
    scorer = make_scorer(a.scorer, db, head, a.minhash_seed, rec, qh ? &*qh : nullptr);
    query = scorer->size() - 1;
  }
  const auto hits = rank_all(*scorer, query);
  char buf[64];
  for (std::size_t r = 0; r < std::min(a.k, hits.size()); ++r) {
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(hits[r].score));
    std::cout << (r + 1) << '\t' << hits[r].id << '\t' << buf << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  Common common;
  std::string db, head, scorer = "maxsim", out_report;
  std::vector<std::size_t> ks{1, 10, 100};
  std::uint64_t minhash_seed = 0;
};

int run_eval(const EvalArgs& a) {
  if (a.ks.empty()) throw UsageError("--ks needs at least one cutoff");
  for (std::size_t k : a.ks) {
    if (k == 0) throw UsageError("--ks entries must be >= 1");
  }
  if (a.scorer == "minhash" && !a.head.empty()) throw UsageError("--head does not apply to --scorer minhash");
  apply_common(a.common);

  const Database db = open_db(a.db);
  const auto head = load_head(a.head);
  const auto scorer = make_scorer(a.scorer, db, head, a.minhash_seed);
  std::vector<std::string> groups;
  for (const auto& r : db.records) groups.push_back(r.group);
  const std::string name = a.scorer + (a.scorer == "minhash" ? "" : (head ? "+head" : "+frozen"));
  const auto report = evaluate(*scorer, groups, a.ks, name);
  write_report_table(std::cout, report);
  if (!a.out_report.empty()) {
    std::ofstream out(a.out_report);
    if (!out) fail(ErrorCode::kIo, "cannot open '" + a.out_report + "'");
    write_report_jsonl(out, report);
  }
  return 0;
}

// ---------------------------------------------------------------- simmap

struct SimmapArgs {
  Common common;
  std::string db, head, query_id, cand_id, out_csv;
};

int run_simmap(const SimmapArgs& a) {
  apply_common(a.common);
  const Database db = open_db(a.db);
  const auto head = load_head(a.head);
  const auto q = embed(db.hidden[db.index_of(a.query_id)], head);
  const auto c = embed(db.hidden[db.index_of(a.cand_id)], head);
  const auto map = similarity_map(q, c);
  std::ofstream out(a.out_csv);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + a.out_csv + "'");
  write_similarity_csv(out, map);
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out_dir;
  SyntheticConfig cfg;
  double test_frac = 0.25;
  std::uint64_t split_seed = 0;
};

void write_subset(const std::filesystem::path& dir, const std::string& stem,
                  const std::vector<SyntheticProtein>& db, const std::vector<std::size_t>& idx) {
  std::ofstream fasta(dir / (stem + ".fasta"));
  std::ofstream labels(dir / (stem + "_labels.tsv"));
  if (!fasta || !labels) fail(ErrorCode::kIo, "cannot write into '" + dir.string() + "'");
  for (std::size_t i : idx) {
    fasta << '>' << db[i].record.id << '\n' << db[i].record.sequence << '\n';
    labels << db[i].record.id << '\t' << db[i].record.group << '\n';
  }
  write_manifest((dir / (stem + "_manifest.json")).string(), stem + ".fasta", stem + "_labels.tsv", "hidden.pcl");
}

int run_synth(const SynthArgs& a) {
  if (!(a.test_frac > 0.0 && a.test_frac < 1.0)) throw UsageError("--test-frac must be in (0, 1)");
  if (a.cfg.n_groups < 2) throw UsageError("--groups must be >= 2");
  const std::filesystem::path dir(a.out_dir);
  std::filesystem::create_directories(dir);
  const auto db = make_synthetic_database(a.cfg);
  std::vector<HiddenSet> hidden;
  std::vector<std::string> groups;
  for (const auto& p : db) {
    hidden.push_back(p.hidden);
    groups.push_back(p.record.group);
  }
  write_hidden_file((dir / "hidden.pcl").string(), hidden);
  std::vector<std::size_t> all(db.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  write_subset(dir, "all", db, all);

  const auto split = split_by_group(std::span<const std::string>(groups), a.test_frac, a.split_seed);
  write_subset(dir, "train", db, split.train);
  write_subset(dir, "test", db, split.test);
  std::ofstream pairs(dir / "train_pairs.tsv");
  std::size_t n_pairs = 0;
  for (std::size_t i : split.train) {
    for (std::size_t j : split.train) {
      if (i == j || groups[i] != groups[j]) continue;
      pairs << db[i].record.id << '\t' << db[j].record.id << '\t' << groups[i] << '\n';
      ++n_pairs;
    }
  }
  std::cerr << "wrote " << db.size() << " proteins (" << split.test.size() << " test) and " << n_pairs
            << " training pairs to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Late-interaction protein homolog search"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train the projection head contrastively");
  c_train->add_option("--pairs", train.pairs, "TSV: anchor_id, positive_id, group")->required();
  c_train->add_option("--hidden", train.hidden, "Hidden-set binary file")->required();
  c_train->add_option("--out-head", train.out_head, "Head checkpoint to write")->required();
  c_train->add_option("--log", train.log, "Training log (default: <out-head>.log)");
  c_train->add_option("--dim", train.dim, "Retrieval dimension D")->capture_default_str();
  c_train->add_option("--batch-size", train.cfg.batch_size)->capture_default_str();
  c_train->add_option("--epochs", train.cfg.epochs)->capture_default_str();
  c_train->add_option("--lr", train.cfg.peak_lr, "Peak learning rate")->capture_default_str();
  c_train->add_option("--warmup", train.cfg.warmup_frac, "Warmup fraction")->capture_default_str();
  c_train->add_option("--weight-decay", train.cfg.weight_decay)->capture_default_str();
  c_train->add_option("--clip", train.cfg.grad_clip_norm, "Global gradient-norm clip")->capture_default_str();
  c_train->add_option("--tau", train.cfg.temperature, "InfoNCE temperature")->capture_default_str();
  c_train->add_option("--seed", train.cfg.seed)->capture_default_str();
  add_common(c_train, train.common);

  SearchArgs search;
  auto* c_search = app.add_subcommand("search", "Rank database proteins against one query");
  c_search->add_option("--db", search.db, "Database manifest (JSON)")->required();
  c_search->add_option("--head", search.head, "Head checkpoint (omit for frozen scoring)");
  c_search->add_option("--query-id", search.query_id, "Query by database id");
  c_search->add_option("--query-fasta", search.query_fasta, "Query from the first FASTA record");
  c_search->add_option("--hidden", search.hidden, "Hidden-set file holding the FASTA query");
  c_search->add_option("--scorer", search.scorer)->check(CLI::IsMember({"maxsim", "pooled", "minhash"}))->capture_default_str();
  c_search->add_option("--k", search.k, "Hits to print")->capture_default_str();
  c_search->add_option("--minhash-seed", search.minhash_seed)->capture_default_str();
  add_common(c_search, search.common);

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Leave-one-out capped recall@k");
  c_eval->add_option("--db", eval.db, "Database manifest (JSON)")->required();
  c_eval->add_option("--head", eval.head, "Head checkpoint (omit for frozen scoring)");
  c_eval->add_option("--scorer", eval.scorer)->check(CLI::IsMember({"maxsim", "pooled", "minhash"}))->capture_default_str();
  c_eval->add_option("--ks", eval.ks, "Comma-separated cutoffs")->delimiter(',')->capture_default_str();
  c_eval->add_option("--out-report", eval.out_report, "JSON-lines report path");
  c_eval->add_option("--minhash-seed", eval.minhash_seed)->capture_default_str();
  add_common(c_eval, eval.common);

  SimmapArgs simmap;
  auto* c_simmap = app.add_subcommand("simmap", "Export a residue-level similarity matrix as CSV");
  c_simmap->add_option("--db", simmap.db, "Database manifest (JSON)")->required();
  c_simmap->add_option("--head", simmap.head, "Head checkpoint (omit for frozen scoring)");
  c_simmap->add_option("--query-id", simmap.query_id)->required();
  c_simmap->add_option("--cand-id", simmap.cand_id)->required();
  c_simmap->add_option("--out-csv", simmap.out_csv)->required();
  add_common(c_simmap, simmap.common);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic group-labeled database");
  c_synth->add_option("--out-dir", synth.out_dir)->required();
  c_synth->add_option("--groups", synth.cfg.n_groups)->capture_default_str();
  c_synth->add_option("--per-group", synth.cfg.per_group)->capture_default_str();
  c_synth->add_option("--hidden-dim", synth.cfg.hidden_dim)->capture_default_str();
  c_synth->add_option("--seed", synth.cfg.seed)->capture_default_str();
  c_synth->add_option("--test-frac", synth.test_frac)->capture_default_str();
  c_synth->add_option("--split-seed", synth.split_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (c_train->parsed()) return run_train(train);
    if (c_search->parsed()) return run_search(search);
    if (c_eval->parsed()) return run_eval(eval);
    if (c_simmap->parsed()) return run_simmap(simmap);
    if (c_synth->parsed()) return run_synth(synth);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
