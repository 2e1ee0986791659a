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

#include "lateprot/io.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "binary_io.hpp"
#include "json.hpp"
#include "lateprot/error.hpp"

namespace lateprot {
namespace {

constexpr std::string_view kEmbeddingMagic = "PCL1";

template <class Set>
void write_sets(const std::string& path, std::span<const Set> sets) {
  std::set<std::string> seen;
  for (const auto& s : sets) {
    if (!seen.insert(s.protein_id()).second) {
      fail(ErrorCode::kDuplicateId, "refusing to write duplicate id '" + s.protein_id() + "'");
    }
    if (s.valid_count() == 0) fail(ErrorCode::kEmptySet, "'" + s.protein_id() + "' has no valid rows");
  }
  binary::Writer w(path);
  w.magic(kEmbeddingMagic);
  w.scalar<std::uint32_t>(kEmbeddingFormatVersion);
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(sets.size()));
  for (const auto& s : sets) {
    w.id(s.protein_id());
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(s.valid_count()));
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(s.dim()));
    if (s.all_valid()) {
      w.template array<float>(s.values());
    } else {
      for (std::size_t t = 0; t < s.length(); ++t) {
        if (s.is_valid(t)) w.template array<float>(s.row(t));
      }
    }
  }
  w.close();
}

template <class Set>
std::vector<Set> read_sets(const std::string& path) {
  binary::Reader r(path);
  r.expect_magic(kEmbeddingMagic);
  const auto version = r.scalar<std::uint32_t>();
  if (version != kEmbeddingFormatVersion) {
    fail(ErrorCode::kUnsupportedVersion, "'" + path + "' has format version " + std::to_string(version));
  }
  const auto count = r.scalar<std::uint32_t>();
  std::vector<Set> out;
  std::set<std::string> seen;
  for (std::uint32_t n = 0; n < count; ++n) {
    std::string id = r.id();
    if (!seen.insert(id).second) fail(ErrorCode::kDuplicateId, "'" + path + "' repeats id '" + id + "'");
    const auto rows = r.scalar<std::uint32_t>();
    const auto dim = r.scalar<std::uint32_t>();
    if (rows == 0 || dim == 0) fail(ErrorCode::kParseError, "'" + path + "': '" + id + "' has T=0 or D=0");
    auto values = r.array<float>(static_cast<std::size_t>(rows) * dim);
    out.emplace_back(std::move(id), rows, dim, std::move(values));
  }
  if (!r.at_end()) {
    fail(ErrorCode::kParseError, "'" + path + "' has " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return out;
}

std::ifstream open_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "'");
  return in;
}

std::string strip(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return cols;
}

[[noreturn]] void parse_error(const std::string& source, std::size_t line, const std::string& what) {
  fail(ErrorCode::kParseError, source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void write_embedding_file(const std::string& path, std::span<const EmbeddingSet> sets) {
  write_sets(path, sets);
}
void write_hidden_file(const std::string& path, std::span<const HiddenSet> sets) { write_sets(path, sets); }
std::vector<EmbeddingSet> read_embedding_file(const std::string& path) { return read_sets<EmbeddingSet>(path); }
std::vector<HiddenSet> read_hidden_file(const std::string& path) { return read_sets<HiddenSet>(path); }

std::vector<FastaRecord> parse_fasta(std::istream& in, const std::string& source) {
  std::vector<FastaRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  std::size_t header_line = 0;
  std::string body;

  auto flush = [&]() {
    if (out.empty()) return;
    if (body.empty()) parse_error(source, header_line, "record '" + out.back().id + "' has an empty sequence");
    std::size_t replaced = 0;
    out.back().sequence = normalize_sequence(body, &replaced);
    if (replaced) {
      std::cerr << "warning: " << source << ": '" << out.back().id << "' has " << replaced
                << " unknown residue(s), mapped to X\n";
    }
    body.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = strip(line);
    if (text.empty()) continue;
    if (text.front() == '>') {
      flush();
      const std::string header = strip(std::string_view(text).substr(1));
      const std::string id = header.substr(0, header.find_first_of(" \t"));
      if (id.empty()) parse_error(source, line_no, "header without an id");
      if (!seen.insert(id).second) fail(ErrorCode::kDuplicateId, source + ": id '" + id + "' appears twice");
      out.push_back({id, {}});
      header_line = line_no;
    } else {
      if (out.empty()) parse_error(source, line_no, "sequence data before the first header");
      for (char c : text) {
        if (c != ' ' && c != '\t') body.push_back(c);
      }
    }
  }
  flush();
  return out;
}

std::vector<FastaRecord> read_fasta(const std::string& path) {
  auto in = open_text(path);
  return parse_fasta(in, path);
}

std::map<std::string, std::string> parse_labels(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (strip(line).empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
      parse_error(source, line_no, "expected 'id<TAB>group'");
    }
    if (!out.emplace(cols[0], cols[1]).second) {
      fail(ErrorCode::kDuplicateId, source + ":" + std::to_string(line_no) + ": id '" + cols[0] + "' labeled twice");
    }
  }
  return out;
}

std::map<std::string, std::string> read_labels(const std::string& path) {
  auto in = open_text(path);
  return parse_labels(in, path);
}

std::vector<ProteinRecord> attach_labels(const std::vector<FastaRecord>& fasta,
                                         const std::map<std::string, std::string>& labels, bool strict) {
  std::vector<ProteinRecord> out;
  out.reserve(fasta.size());
  for (const auto& f : fasta) {
    const auto it = labels.find(f.id);
    if (it == labels.end()) {
      if (strict) fail(ErrorCode::kMissingLabel, "no group label for '" + f.id + "'");
      std::cerr << "warning: dropping unlabeled protein '" << f.id << "'\n";
      continue;
    }
    ProteinRecord r{f.id, f.sequence, it->second};
    validate(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PairSpec> read_pairs(const std::string& path) {
  auto in = open_text(path);
  std::vector<PairSpec> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (strip(line).empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 3 || cols[0].empty() || cols[1].empty() || cols[2].empty()) {
      parse_error(path, line_no, "expected 'anchor_id<TAB>positive_id<TAB>group'");
    }
    out.push_back({cols[0], cols[1], cols[2]});
  }
  return out;
}

DatabaseManifest load_manifest(const std::string& path) {
  auto in = open_text(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, "'" + path + "': " + e.what());
  }
  const auto base = std::filesystem::path(path).parent_path();
  auto field = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
      fail(ErrorCode::kParseError, "'" + path + "' lacks string field '" + key + "'");
    }
    std::filesystem::path p = j[key].get<std::string>();
    return (p.is_absolute() ? p : base / p).string();
  };
  DatabaseManifest m;
  m.fasta_file = field("fasta");
  m.label_file = field("labels");
  m.embedding_file = field("embeddings");
  m.records = attach_labels(read_fasta(m.fasta_file), read_labels(m.label_file), true);
  return m;
}

void write_manifest(const std::string& path, const std::string& fasta_file, const std::string& label_file,
                    const std::string& embedding_file) {
  nlohmann::json j = {{"fasta", fasta_file}, {"labels", label_file}, {"embeddings", embedding_file}};
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

std::size_t Database::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].id == id) return i;
  }
  fail(ErrorCode::kUnknownId, "id '" + id + "' is not in the database");
}

Database load_database(const DatabaseManifest& manifest) {
  auto sets = read_hidden_file(manifest.embedding_file);
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < sets.size(); ++i) by_id.emplace(sets[i].protein_id(), i);
  Database db;
  db.records = manifest.records;
  for (const auto& r : db.records) {
    const auto it = by_id.find(r.id);
    if (it == by_id.end()) {
      fail(ErrorCode::kUnknownId, "'" + manifest.embedding_file + "' has no residue set for '" + r.id + "'");
    }
    db.hidden.push_back(truncate(sets[it->second]));
  }
  return db;
}

}  // namespace lateprot
