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

// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli_runner.hpp"
#include "json.hpp"
#include "lateprot/error.hpp"
#include "lateprot/evaluator.hpp"
#include "lateprot/io.hpp"
#include "lateprot/minhash.hpp"
#include "lateprot/scorer.hpp"
#include "lateprot/synthetic.hpp"
#include "lateprot/trainer.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace lateprot;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

Mask random_mask(std::mt19937_64& rng, std::size_t t) {
  Mask m(t, 1);
  for (auto& x : m) x = (rng() % 4) != 0;
  m[rng() % t] = 1;
  return m;
}

// ------------------------------------------------------------------ 1

Outcome maxsim_oracle() {
  constexpr double kTol = 1e-5;
  constexpr double kLimit = 1.0;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> len(1, 16);
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 200; ++i) {
    const std::size_t d = i % 2 ? 128 : 4;
    const std::size_t tq = len(rng), td = len(rng);
    const auto q = oracle::random_unit(rng, "q", tq, d, random_mask(rng, tq));
    const auto c = oracle::random_unit(rng, "d", td, d, random_mask(rng, td));
    worst = std::max(worst, std::abs(double(maxsim(q, c)) - oracle::maxsim(q, c)));
  }
  const double t = seconds_since(t0);
  return {worst <= kTol && t < kLimit,
          fmt("200 pairs, D in {4,128}: max |err| = %.2e (tol %.0e), %.3f s (limit %.0f s)", worst, kTol, t, kLimit)};
}

// ------------------------------------------------------------------ 2

Outcome maxsim_invariants() {
  constexpr double kSelfTol = 1e-4;
  constexpr double kPadTol = 1e-6;
  constexpr int kTrials = 1000;
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> len(1, 16);
  std::uniform_int_distribution<std::size_t> dims(1, 64);
  int self_bad = 0, perm_bad = 0, mono_bad = 0, pad_bad = 0;
  double self_worst = 0, pad_worst = 0;

  for (int i = 0; i < kTrials; ++i) {
    const std::size_t t = len(rng), d = dims(rng);
    const auto a = oracle::random_unit(rng, "a", t, d, random_mask(rng, t));
    const double err = std::abs(double(maxsim(a, a)) - double(a.valid_count()));
    self_worst = std::max(self_worst, err);
    self_bad += err > kSelfTol;
  }
  for (int i = 0; i < kTrials; ++i) {
    const std::size_t d = dims(rng);
    const auto q = oracle::random_unit(rng, "q", len(rng), d);
    const auto c = oracle::random_unit(rng, "c", len(rng), d);
    std::vector<std::size_t> perm(c.length());
    for (std::size_t r = 0; r < perm.size(); ++r) perm[r] = r;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<float> pv;
    for (auto r : perm) pv.insert(pv.end(), c.row(r).begin(), c.row(r).end());
    perm_bad += maxsim(q, EmbeddingSet("c", c.length(), d, pv)) != maxsim(q, c);
  }
  for (int i = 0; i < kTrials; ++i) {
    const std::size_t d = dims(rng);
    const auto q = oracle::random_unit(rng, "q", len(rng), d);
    const auto c = oracle::random_unit(rng, "c", len(rng), d);
    const auto extra = oracle::random_unit(rng, "x", 1, d);
    std::vector<float> grown(c.values().begin(), c.values().end());
    grown.insert(grown.end(), extra.values().begin(), extra.values().end());
    mono_bad += maxsim(q, EmbeddingSet("c", c.length() + 1, d, grown)) < maxsim(q, c);
  }
  for (int i = 0; i < kTrials; ++i) {
    const std::size_t d = dims(rng);
    const auto q = oracle::random_unit(rng, "q", len(rng), d);
    const auto c = oracle::random_unit(rng, "c", len(rng), d);
    auto pad = [&](const EmbeddingSet& s) {
      // Interleave junk rows marked invalid at random positions.
      std::vector<float> v;
      Mask m;
      for (std::size_t r = 0; r < s.length(); ++r) {
        while (rng() % 3 == 0) {
          v.insert(v.end(), d, 9.0f);
          m.push_back(0);
        }
        v.insert(v.end(), s.row(r).begin(), s.row(r).end());
        m.push_back(1);
      }
      v.insert(v.end(), d, -3.0f);
      m.push_back(0);
      return EmbeddingSet(s.protein_id(), m.size(), d, v, m);
    };
    const double base = maxsim(q, c);
    const double err = std::max(std::abs(maxsim(pad(q), c) - base), std::abs(maxsim(q, pad(c)) - base));
    pad_worst = std::max(pad_worst, err);
    pad_bad += err > kPadTol;
  }
  return {self_bad + perm_bad + mono_bad + pad_bad == 0,
          fmt("%d trials each: self-match worst %.1e (tol %.0e), permutation violations %d (exact), "
              "monotonicity violations %d (exact), padding worst %.1e (tol %.0e)",
              kTrials, self_worst, kSelfTol, perm_bad, mono_bad, pad_worst, kPadTol)};
}

// ------------------------------------------------------------------ 3

Outcome gradient_check() {
  constexpr double kRelTol = 1e-4;
  constexpr double kFloor = 1e-8;
  constexpr double kStep = 1e-5;
  constexpr double kLimit = 30.0;
  const std::size_t b = 4, h = 8, d = 4;
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  double worst = 0.0;
  std::size_t checked = 0;
  const auto t0 = Clock::now();
  for (int cfg = 0; cfg < 20; ++cfg) {
    std::vector<TrainPair> batch;
    std::vector<oracle::Dense> da, dp;
    for (std::size_t i = 0; i < b; ++i) {
      auto a = std::make_shared<const HiddenSet>(oracle::random_hidden(rng, "a" + std::to_string(i), len(rng), h));
      auto p = std::make_shared<const HiddenSet>(oracle::random_hidden(rng, "p" + std::to_string(i), len(rng), h));
      da.push_back(oracle::valid_rows(*a));
      dp.push_back(oracle::valid_rows(*p));
      batch.push_back({a, p, "g"});
    }
    HeadWeights w = init_head(d, h, 1000 + cfg);
    std::normal_distribution<double> nd(0, 0.5);
    for (auto& x : w.w) x = nd(rng);
    const auto lg = infonce_grad_w(batch, w, 1.0);
    for (std::size_t k = 0; k < w.w.size(); ++k) {
      auto up = w.w, dn = w.w;
      up[k] += kStep;
      dn[k] -= kStep;
      const double fd = (oracle::batch_loss(da, dp, up, d, 1.0) - oracle::batch_loss(da, dp, dn, d, 1.0)) / (2 * kStep);
      if (std::abs(lg.grad[k]) <= kFloor) continue;
      worst = std::max(worst, std::abs(lg.grad[k] - fd) / std::abs(lg.grad[k]));
      ++checked;
    }
  }
  const double t = seconds_since(t0);
  return {worst < kRelTol && checked > 0 && t < kLimit,
          fmt("20 configs (B=4,H=8,D=4), %zu entries with |g| > %.0e: max rel err %.2e (tol %.0e), %.2f s (limit %.0f s)",
              checked, kFloor, worst, kRelTol, t, kLimit)};
}

// ------------------------------------------------------------------ 4

Outcome infonce_anchors() {
  constexpr double kUniformTol = 1e-9;
  constexpr double kShiftTol = 1e-10;
  bool ok = infonce_loss(std::vector<double>{42.0}, 1, 1.0) == 0.0;
  double uni_worst = 0, shift_worst = 0;
  for (std::size_t b : {2, 4, 8}) {
    uni_worst = std::max(uni_worst, std::abs(infonce_loss(std::vector<double>(b * b, 3.0), b, 1.0) - std::log(double(b))));
  }
  std::mt19937_64 rng(404);
  std::normal_distribution<double> nd(0, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 2 + trial % 15;
    std::vector<double> s(b * b);
    for (auto& x : s) x = nd(rng);
    const double base = infonce_loss(s, b, 1.0);
    for (double c : {-50.0, -1.0, 0.5, 7.0, 100.0}) {
      auto sc = s;
      for (auto& x : sc) x += c;
      shift_worst = std::max(shift_worst, std::abs(infonce_loss(sc, b, 1.0) - base));
    }
  }
  ok = ok && uni_worst <= kUniformTol && shift_worst <= kShiftTol;
  return {ok, fmt("B=1 loss exactly 0: %s; uniform S vs ln B worst %.1e (tol %.0e); shift worst %.1e (tol %.0e)",
                  infonce_loss(std::vector<double>{42.0}, 1, 1.0) == 0.0 ? "yes" : "no", uni_worst, kUniformTol,
                  shift_worst, kShiftTol)};
}

// ------------------------------------------------------------------ 5

class TableScorer final : public CandidateScorer {
 public:
  TableScorer(std::vector<std::string> ids, std::function<float(std::size_t, std::size_t)> fn)
      : ids_(std::move(ids)), fn_(std::move(fn)) {}
  std::size_t size() const override { return ids_.size(); }
  const std::string& id(std::size_t i) const override { return ids_[i]; }
  float score(std::size_t q, std::size_t c) const override { return fn_(q, c); }

 private:
  std::vector<std::string> ids_;
  std::function<float(std::size_t, std::size_t)> fn_;
};

Outcome capped_recall_formula() {
  // Ten proteins p0..p9 in groups A={p0..p3}, B={p4..p6}, C={p7,p8}, D={p9}.
  // Score = -|q - c|, ties broken by id, so the nearest index ranks first
  // (the lower one on a tie). Top-1 hits by hand:
  //   p0->p1 A, p1->p0 A, p2->p1 A, p3->p2 A, p4->p3 miss, p5->p4 B,
  //   p6->p5 B, p7->p6 miss, p8->p7 C; p9 is a singleton and skipped.
  // With 9 candidates every relevant protein sits in the top 10, so k=10 and
  // k=100 saturate at 1 for every group size.
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("p" + std::to_string(i));
  const std::vector<std::string> groups{"A", "A", "A", "A", "B", "B", "B", "C", "C", "D"};
  const TableScorer s(ids, [](std::size_t q, std::size_t c) { return -std::abs(float(q) - float(c)); });
  const std::vector<std::size_t> ks{1, 10, 100};
  const auto r = evaluate(s, groups, ks);

  const std::map<std::string, std::vector<double>> want{
      {"p0", {1, 1, 1}}, {"p1", {1, 1, 1}}, {"p2", {1, 1, 1}}, {"p3", {1, 1, 1}}, {"p4", {0, 1, 1}},
      {"p5", {1, 1, 1}}, {"p6", {1, 1, 1}}, {"p7", {0, 1, 1}}, {"p8", {1, 1, 1}}};
  bool ok = r.per_query.size() == want.size() && r.skipped == std::vector<std::string>{"p9"};
  for (const auto& q : r.per_query) {
    const auto it = want.find(q.query_id);
    ok = ok && it != want.end() && q.capped_recall == it->second;
  }
  ok = ok && r.aggregate == std::vector<double>{7.0 / 9.0, 1.0, 1.0};

  // Standalone values of the formula.
  std::vector<std::string> ranked;
  std::set<std::string> rel;
  for (int i = 0; i < 400; ++i) ranked.push_back("x" + std::to_string(i));
  for (int i = 0; i < 80; ++i) rel.insert(ranked[i]);
  for (int i = 150; i < 320; ++i) rel.insert(ranked[i]);
  ok = ok && capped_recall_at_k(ranked, rel, 100) == 0.8;
  ok = ok && capped_recall_at_k(ranked, {"x0", "x5", "x9"}, 10) == 1.0;
  ok = ok && capped_recall_at_k(ranked, {"x0"}, 1) == 1.0 && capped_recall_at_k(ranked, {"x1"}, 1) == 0.0;
  return {ok, fmt("10-protein database, k in {1,10,100}: aggregate (%.6f, %g, %g), expected (7/9, 1, 1), exact; "
                  "k=100/N_q=250/80 hits = 0.8; saturation k=10/N_q=3 = 1",
                  r.aggregate[0], r.aggregate[1], r.aggregate[2])};
}

// ------------------------------------------------------------------ 6

Outcome minhash_accuracy() {
  constexpr double kCoverage = 0.99;
  constexpr double kBias = 0.02;
  constexpr double kLimit = 10.0;
  static constexpr std::string_view aa = "ACDEFGHIKLMNPQRSTVWY";
  std::mt19937_64 rng(606);
  auto seq = [&](std::size_t n) {
    std::string s(n, 'A');
    for (auto& c : s) c = aa[rng() % aa.size()];
    return s;
  };
  const MinHashScheme scheme(0);
  int within = 0;
  double bias = 0;
  const int n = 500;
  const auto t0 = Clock::now();
  for (int i = 0; i < n; ++i) {
    // A shared planted segment flanked by independent random sequence.
    const std::size_t shared = 5 + rng() % 300;
    const std::string core = seq(shared);
    const std::string a = seq(rng() % 120) + core + seq(rng() % 120);
    const std::string b = seq(rng() % 120) + core + seq(rng() % 120);
    const double j = exact_jaccard(a, b);
    const double est = minhash_similarity(scheme.sign(a), scheme.sign(b));
    within += std::abs(est - j) <= 4 * std::sqrt(j * (1 - j) / 256) + 1.0 / 256;
    bias += (est - j) / n;
  }
  const double t = seconds_since(t0);
  const double frac = double(within) / n;
  return {frac >= kCoverage && std::abs(bias) <= kBias && t < kLimit,
          fmt("500 planted pairs: %.1f%% within 4 sigma + 1/256 (need >= %.0f%%), mean bias %+.4f (tol %.2f), %.2f s (limit %.0f s)",
              100 * frac, 100 * kCoverage, bias, kBias, t, kLimit)};
}

// ------------------------------------------------------------------ 7

struct E2eResult {
  double frozen = 0, trained = 0, pooled = 0;
  HeadWeights weights;
};

E2eResult run_e2e() {
  SyntheticConfig sc;
  sc.per_group = 40;
  sc.seed = 7;
  const auto db = make_synthetic_database(sc);
  std::vector<std::string> groups;
  std::vector<std::shared_ptr<const HiddenSet>> sets;
  for (const auto& p : db) {
    groups.push_back(p.record.group);
    sets.push_back(std::make_shared<const HiddenSet>(p.hidden));
  }
  const auto split = split_by_group(std::span<const std::string>(groups), 0.25, 11);
  std::vector<TrainPair> pairs;
  for (auto i : split.train)
    for (auto j : split.train)
      if (i != j && groups[i] == groups[j]) pairs.push_back({sets[i], sets[j], groups[i]});
  TrainConfig cfg;
  cfg.seed = 3;
  const auto trained = train_projection(pairs, 16, cfg);

  std::vector<EmbeddingSet> frozen, projected;
  std::vector<std::string> test_groups;
  for (auto i : split.test) {
    frozen.push_back(l2_normalize_rows(db[i].hidden));
    projected.push_back(project(db[i].hidden, trained.head));
    test_groups.push_back(groups[i]);
  }
  const std::vector<std::size_t> ks{10};
  E2eResult r;
  r.frozen = evaluate(MaxSimScorer(frozen), test_groups, ks).aggregate[0];
  r.trained = evaluate(MaxSimScorer(projected), test_groups, ks).aggregate[0];
  r.pooled = evaluate(PooledScorer(projected), test_groups, ks).aggregate[0];
  r.weights = trained.weights;
  return r;
}

Outcome end_to_end() {
  constexpr double kMargin = 0.10;
  constexpr double kLimit = 300.0;
  const auto t0 = Clock::now();
  const auto first = run_e2e();
  const auto second = run_e2e();
  const double t = seconds_since(t0);
  const bool same = first.weights == second.weights && first.trained == second.trained;
  return {first.trained - first.frozen >= kMargin && first.trained > first.pooled && same && t < kLimit,
          fmt("40 groups (30 train / 10 held out), D=16: cR@10 trained %.4f, frozen %.4f (need +%.2f), trained pooled "
              "%.4f; repeat run identical: %s; %.1f s for both runs (limit %.0f s)",
              first.trained, first.frozen, kMargin, first.pooled, same ? "yes" : "no", t, kLimit)};
}

// ------------------------------------------------------------------ 8

std::map<std::string, std::vector<double>> recalls(const std::string& path) {
  std::map<std::string, std::vector<double>> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const std::string key = j.contains("query") ? j["query"].get<std::string>()
                            : j.contains("skipped") ? "skipped:" + j["skipped"].get<std::string>()
                                                    : "aggregate";
    auto& v = out[key];
    for (const char* k : {"cR@1", "cR@10", "cR@100"})
      if (j.contains(k)) v.push_back(j[k].get<double>());
  }
  return out;
}

Outcome determinism() {
  TempDir dir;
  auto q = [](const std::string& s) { return "'" + s + "'"; };
  if (run_cli("synth --out-dir " + q(dir.file("d")) + " --groups 10 --per-group 8").exit_code != 0) {
    return {false, "synth failed"};
  }
  const std::string train = "train --pairs " + q(dir.file("d/train_pairs.tsv")) + " --hidden " +
                            q(dir.file("d/hidden.pcl")) + " --dim 16 --seed 5 --out-head ";
  const int e1 = run_cli(train + q(dir.file("h1.pcw")) + " --threads 1").exit_code;
  const int e2 = run_cli(train + q(dir.file("h2.pcw")) + " --threads 4").exit_code;
  const bool heads_same = e1 == 0 && e2 == 0 && slurp(dir.file("h1.pcw")) == slurp(dir.file("h2.pcw")) &&
                          slurp(dir.file("h1.pcw.log")) == slurp(dir.file("h2.pcw.log"));

  bool evals_same = true;
  std::size_t compared = 0;
  for (const std::string scorer : {"maxsim", "pooled", "minhash"}) {
    const std::string head = scorer == "minhash" ? "" : " --head " + q(dir.file("h1.pcw"));
    const std::string eval = "eval --db " + q(dir.file("d/all_manifest.json")) + head + " --scorer " + scorer +
                             " --out-report ";
    std::map<std::string, std::vector<double>> first;
    for (int threads : {1, 3, 8}) {
      const auto path = dir.file(scorer + std::to_string(threads) + ".jsonl");
      if (run_cli(eval + q(path) + " --threads " + std::to_string(threads)).exit_code != 0) return {false, "eval failed"};
      const auto r = recalls(path);
      if (threads == 1) first = r;
      evals_same = evals_same && r == first && !r.empty();
      compared += r.size();
    }
  }
  return {heads_same && evals_same,
          fmt("train --threads 1 vs 4: checkpoint and log bit-identical: %s; eval --threads 1/3/8 over 3 scorers "
              "(%zu report rows): identical: %s",
              heads_same ? "yes" : "no", compared, evals_same ? "yes" : "no")};
}

// ------------------------------------------------------------------ 9

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  } catch (...) {
  }
  return ErrorCode::kInvalidArgument;  // sentinel: no Error raised
}

Outcome file_formats() {
  TempDir dir;
  std::mt19937_64 rng(909);
  std::vector<std::string> notes;
  bool ok = true;

  auto corrupt = [&](const std::string& name, const std::string& path, auto&& reader) {
    const auto good = slurp(path);
    auto bad = good;
    bad[0] ^= 0x20;
    spit(path, bad);
    const bool magic = code_of(reader) == ErrorCode::kBadMagic;
    bad.assign(good.begin(), good.end() - 3);
    spit(path, bad);
    const bool shortened = code_of(reader) == ErrorCode::kTruncated;
    spit(path, good);
    ok = ok && magic && shortened;
    notes.push_back(name + (magic && shortened ? " ok" : " MISSED"));
  };

  std::vector<EmbeddingSet> sets;
  for (int i = 0; i < 5; ++i) sets.push_back(oracle::random_unit(rng, "e" + std::to_string(i), 1 + i * 7, 32));
  const auto epath = dir.file("e.pcl");
  write_embedding_file(epath, sets);
  ok = ok && read_embedding_file(epath) == sets;
  corrupt("embedding", epath, [&] { read_embedding_file(epath); });

  std::vector<NamedSignature> sigs;
  const MinHashScheme scheme(77);
  for (int i = 0; i < 5; ++i) {
    std::string s(30 + i, 'A');
    for (auto& c : s) c = "ACDEFGHIKLMNPQRSTVWY"[rng() % 20];
    sigs.push_back({"s" + std::to_string(i), scheme.sign(s)});
  }
  const auto spath = dir.file("s.pcm");
  write_signature_file(spath, sigs);
  const auto sback = read_signature_file(spath);
  bool sig_same = sback.size() == sigs.size();
  for (std::size_t i = 0; sig_same && i < sigs.size(); ++i)
    sig_same = sback[i].id == sigs[i].id && sback[i].signature == sigs[i].signature;
  ok = ok && sig_same;
  corrupt("signature", spath, [&] { read_signature_file(spath); });

  const auto head = init_head(16, 32, 4).to_head();
  const auto hpath = dir.file("h.pcw");
  write_head_file(hpath, head);
  ok = ok && read_head_file(hpath) == head;
  corrupt("head", hpath, [&] { read_head_file(hpath); });

  std::string joined;
  for (const auto& n : notes) joined += (joined.empty() ? "" : ", ") + n;
  return {ok, "write/read identity for embedding, signature and head files; corrupted magic and truncated length "
              "detected: " + joined};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"maxsim_oracle_equivalence", maxsim_oracle},
      {"maxsim_invariants", maxsim_invariants},
      {"gradient_verification", gradient_check},
      {"infonce_analytic_anchors", infonce_anchors},
      {"capped_recall_formula", capped_recall_formula},
      {"minhash_accuracy", minhash_accuracy},
      {"end_to_end_synthetic_training", end_to_end},
      {"determinism", determinism},
      {"file_format_round_trip", file_formats},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed;
}
