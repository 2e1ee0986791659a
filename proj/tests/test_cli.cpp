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

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "cli_runner.hpp"
#include "doctest.h"
#include "json.hpp"
#include "lateprot/io.hpp"
#include "lateprot/minhash.hpp"
#include "lateprot/scorer.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace lateprot;

namespace {

std::vector<std::vector<std::string>> tsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, '\t')) cols.push_back(c);
    rows.push_back(cols);
  }
  return rows;
}

std::string q(const std::string& s) { return "'" + s + "'"; }

// Small hand-built database: groups of random sequences plus hidden sets,
// with "dup" an exact copy of "a0" under another id and group.
struct SmallDb {
  TempDir dir;
  std::string manifest;
  std::vector<ProteinRecord> records;

  explicit SmallDb(bool with_singleton = false) {
    std::mt19937_64 rng(11);
    std::vector<HiddenSet> hidden;
    std::ofstream fasta(dir.file("db.fasta")), labels(dir.file("labels.tsv"));
    auto add = [&](const std::string& id, const std::string& group, const std::string& seq, HiddenSet h) {
      fasta << '>' << id << '\n' << seq << '\n';
      labels << id << '\t' << group << '\n';
      records.push_back({id, seq, group});
      hidden.push_back(std::move(h));
    };
    static constexpr std::string_view aa = "ACDEFGHIKLMNPQRSTVWY";
    auto seq = [&](std::size_t n) {
      std::string s(n, 'A');
      for (auto& c : s) c = aa[rng() % aa.size()];
      return s;
    };
    for (const char* g : {"a", "b", "c"}) {
      for (int m = 0; m < 3; ++m) {
        const std::string id = std::string(g) + std::to_string(m);
        add(id, g, seq(20 + m), oracle::random_hidden(rng, id, 6 + m, 8));
      }
    }
    const auto& src = hidden.front();
    add("dup", "z", records.front().sequence,
        HiddenSet("dup", src.length(), src.dim(), std::vector<float>(src.values().begin(), src.values().end())));
    add("z1", "z", seq(25), oracle::random_hidden(rng, "z1", 5, 8));
    if (with_singleton) add("solo", "s", seq(22), oracle::random_hidden(rng, "solo", 5, 8));
    write_hidden_file(dir.file("h.pcl"), hidden);
    manifest = dir.file("m.json");
    write_manifest(manifest, "db.fasta", "labels.tsv", "h.pcl");
  }
};

}  // namespace

TEST_CASE("train: config errors exit 2 before touching files") {
  TempDir dir;
  const auto r = run_cli("train --pairs /nonexistent --hidden /nonexistent --out-head " + q(dir.file("h")) +
                             " --batch-size 1",
                         dir.file("err"));
  CHECK(r.exit_code == 2);
  std::ifstream err(dir.file("err"));
  std::string msg((std::istreambuf_iterator<char>(err)), {});
  CHECK(msg.find("batch") != std::string::npos);
  CHECK(run_cli("train --pairs x").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("search --db x --query-id a --scorer nope").exit_code == 2);
}

TEST_CASE("train: data errors exit 3, repeated runs are bit-identical") {
  TempDir dir;
  REQUIRE(run_cli("synth --out-dir " + q(dir.file("d")) + " --groups 6 --per-group 6 --hidden-dim 8").exit_code == 0);
  CHECK(run_cli("train --pairs /nonexistent --hidden " + q(dir.file("d/hidden.pcl")) + " --out-head " + q(dir.file("x"))).exit_code == 3);

  const std::string base = "train --pairs " + q(dir.file("d/train_pairs.tsv")) + " --hidden " + q(dir.file("d/hidden.pcl")) +
                           " --dim 4 --epochs 2 --seed 9 --out-head ";
  REQUIRE(run_cli(base + q(dir.file("h1.pcw"))).exit_code == 0);
  REQUIRE(run_cli(base + q(dir.file("h2.pcw")) + " --threads 1").exit_code == 0);
  CHECK(slurp(dir.file("h1.pcw")) == slurp(dir.file("h2.pcw")));
  CHECK(slurp(dir.file("h1.pcw.log")) == slurp(dir.file("h2.pcw.log")));
  CHECK(!slurp(dir.file("h1.pcw.log")).empty());

  spit_text(dir.file("bad_pairs.tsv"), "nobody\tnothing\tg\n");
  CHECK(run_cli("train --pairs " + q(dir.file("bad_pairs.tsv")) + " --hidden " + q(dir.file("d/hidden.pcl")) +
                " --out-head " + q(dir.file("x")))
            .exit_code == 3);
}

TEST_CASE("search: duplicates rank first, self is excluded, unknown ids exit 3") {
  SmallDb db;
  const auto r = run_cli("search --db " + q(db.manifest) + " --query-id a0 --k 1");
  REQUIRE(r.exit_code == 0);
  const auto rows = tsv(r.out);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0][0] == "1");
  CHECK(rows[0][1] == "dup");

  const auto all = run_cli("search --db " + q(db.manifest) + " --query-id a0 --k 100 --scorer pooled");
  REQUIRE(all.exit_code == 0);
  const auto all_rows = tsv(all.out);
  CHECK(all_rows.size() == db.records.size() - 1);
  for (const auto& row : all_rows) CHECK(row[1] != "a0");

  CHECK(run_cli("search --db " + q(db.manifest) + " --query-id nobody").exit_code == 3);
  CHECK(run_cli("search --db " + q(db.manifest)).exit_code == 2);
  CHECK(run_cli("search --db /nonexistent.json --query-id a0").exit_code == 3);
}

TEST_CASE("search: minhash ranking equals the library ranking") {
  SmallDb db;
  std::vector<NamedSignature> sigs;
  const MinHashScheme scheme(4);
  for (const auto& rec : db.records) sigs.push_back({rec.id, scheme.sign(rec.sequence)});
  const MinHashScorer scorer(sigs);
  for (std::size_t qi : {0, 4}) {
    const auto want = rank_all(scorer, qi);
    const auto r = run_cli("search --db " + q(db.manifest) + " --scorer minhash --minhash-seed 4 --k 100 --query-id " +
                           db.records[qi].id);
    REQUIRE(r.exit_code == 0);
    const auto rows = tsv(r.out);
    REQUIRE(rows.size() == want.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i][1] == want[i].id);
      CHECK(std::stod(rows[i][2]) == doctest::Approx(want[i].score));
    }
  }
}

TEST_CASE("search: external FASTA query") {
  SmallDb db;
  spit_text(db.dir.file("q.fasta"), ">ext\n" + db.records[3].sequence + "\n");
  const auto hidden = read_hidden_file(db.dir.file("h.pcl"));
  std::vector<HiddenSet> qh{HiddenSet("ext", hidden[3].length(), hidden[3].dim(),
                                      std::vector<float>(hidden[3].values().begin(), hidden[3].values().end()))};
  write_hidden_file(db.dir.file("q.pcl"), qh);
  const auto r = run_cli("search --db " + q(db.manifest) + " --query-fasta " + q(db.dir.file("q.fasta")) + " --hidden " +
                         q(db.dir.file("q.pcl")) + " --k 1");
  REQUIRE(r.exit_code == 0);
  CHECK(tsv(r.out)[0][1] == db.records[3].id);
  CHECK(run_cli("search --db " + q(db.manifest) + " --query-fasta " + q(db.dir.file("q.fasta"))).exit_code == 2);
}

TEST_CASE("eval: separable database, --ks and skipped singletons") {
  TempDir dir;
  std::vector<EmbeddingSet> sets;
  std::ofstream fasta(dir.file("db.fasta")), labels(dir.file("labels.tsv"));
  std::vector<HiddenSet> hidden;
  for (int g = 0; g < 4; ++g) {
    for (int m = 0; m < 3; ++m) {
      const std::string id = "g" + std::to_string(g) + "_" + std::to_string(m);
      std::vector<float> v(8, 0.0f);
      v[g] = 1.0f + 0.5f * m;
      hidden.emplace_back(id, 1, 8, v);
      fasta << '>' << id << "\nMKVLAGG\n";
      labels << id << '\t' << 'G' << g << '\n';
    }
  }
  hidden.emplace_back("solo", 1, 8, std::vector<float>{0, 0, 0, 0, 0, 0, 0, 1});
  fasta << ">solo\nMKVLAGG\n";
  labels << "solo\tS\n";
  fasta.close();
  labels.close();
  write_hidden_file(dir.file("h.pcl"), hidden);
  write_manifest(dir.file("m.json"), "db.fasta", "labels.tsv", "h.pcl");

  const auto r = run_cli("eval --db " + q(dir.file("m.json")) + " --out-report " + q(dir.file("r.jsonl")));
  REQUIRE(r.exit_code == 0);
  std::ifstream in(dir.file("r.jsonl"));
  std::string line;
  bool saw_aggregate = false, saw_skip = false;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j.contains("aggregate")) {
      saw_aggregate = true;
      for (const char* k : {"cR@1", "cR@10", "cR@100"}) CHECK(j[k].get<double>() == 1.0);
    }
    if (j.contains("skipped")) saw_skip = j["skipped"] == "solo";
  }
  CHECK(saw_aggregate);
  CHECK(saw_skip);
  CHECK(r.out.find("solo") != std::string::npos);

  const auto only1 = run_cli("eval --db " + q(dir.file("m.json")) + " --ks 1 --out-report " + q(dir.file("r1.jsonl")));
  REQUIRE(only1.exit_code == 0);
  const auto text = slurp(dir.file("r1.jsonl"));
  const std::string s(text.begin(), text.end());
  CHECK(s.find("cR@1\"") != std::string::npos);
  CHECK(s.find("cR@10") == std::string::npos);
  CHECK(run_cli("eval --db " + q(dir.file("m.json")) + " --ks 0").exit_code == 2);
}

TEST_CASE("simmap: self map, consistency with search, missing id") {
  SmallDb db;
  REQUIRE(run_cli("simmap --db " + q(db.manifest) + " --query-id b1 --cand-id b1 --out-csv " + q(db.dir.file("s.csv"))).exit_code == 0);
  auto read_csv = [](const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> m;
    while (std::getline(in, line)) {
      std::vector<double> row;
      std::istringstream ls(line);
      std::string c;
      std::getline(ls, c, ',');
      while (std::getline(ls, c, ',')) row.push_back(std::stod(c));
      m.push_back(row);
    }
    return m;
  };
  const auto self = read_csv(db.dir.file("s.csv"));
  REQUIRE(self.size() == 7);
  for (std::size_t i = 0; i < self.size(); ++i) {
    CHECK(self[i][i] == doctest::Approx(1.0).epsilon(1e-6));
    for (std::size_t j = 0; j < self.size(); ++j) CHECK(self[i][j] == self[j][i]);
  }

  REQUIRE(run_cli("simmap --db " + q(db.manifest) + " --query-id a1 --cand-id c2 --out-csv " + q(db.dir.file("p.csv"))).exit_code == 0);
  double sum = 0;
  for (const auto& row : read_csv(db.dir.file("p.csv"))) sum += *std::max_element(row.begin(), row.end());
  const auto hits = tsv(run_cli("search --db " + q(db.manifest) + " --query-id a1 --k 100").out);
  bool found = false;
  for (const auto& h : hits) {
    if (h[1] != "c2") continue;
    found = true;
    CHECK(std::abs(std::stod(h[2]) - sum) < 1e-5);
  }
  CHECK(found);

  CHECK(run_cli("simmap --db " + q(db.manifest) + " --query-id a1 --cand-id nobody --out-csv " + q(db.dir.file("x.csv"))).exit_code == 3);
}

TEST_CASE("help exits 0") { CHECK(run_cli("--help").exit_code == 0); }
