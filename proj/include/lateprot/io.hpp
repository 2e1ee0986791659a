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

// File formats: residue-set binaries, FASTA, label/pair TSVs and the
// database manifest.
//
// Residue-set binary layout (little-endian):
//   "PCL1" | u32 version (=1) | u32 count |
//   count x ( u16 id_len | id bytes | u32 T | u32 D | T*D f32 row-major )
// Only valid rows are stored; a padded set is written in compacted form.

#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lateprot/core_types.hpp"

namespace lateprot {

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

void write_embedding_file(const std::string& path, std::span<const EmbeddingSet> sets);
void write_hidden_file(const std::string& path, std::span<const HiddenSet> sets);

//! Throws kBadMagic, kUnsupportedVersion, kTruncated, kDuplicateId, or
//! kParseError for trailing bytes and zero-sized sets.
std::vector<EmbeddingSet> read_embedding_file(const std::string& path);
std::vector<HiddenSet> read_hidden_file(const std::string& path);

struct FastaRecord {
  std::string id;
  std::string sequence;

  bool operator==(const FastaRecord&) const = default;
};

//! Header id is the token up to the first whitespace; body lines are
//! concatenated. Letters outside the amino-acid alphabet become 'X' (with a
//! warning on stderr). Throws kParseError (with line number) or kDuplicateId.
std::vector<FastaRecord> parse_fasta(std::istream& in, const std::string& source = "<stream>");
std::vector<FastaRecord> read_fasta(const std::string& path);

//! Two tab-separated columns per line: id, group. No header.
std::map<std::string, std::string> parse_labels(std::istream& in, const std::string& source = "<stream>");
std::map<std::string, std::string> read_labels(const std::string& path);

//! Joins sequences with their labels. In strict mode an unlabeled id throws
//! kMissingLabel; otherwise it is dropped with a warning.
std::vector<ProteinRecord> attach_labels(const std::vector<FastaRecord>& fasta,
                                         const std::map<std::string, std::string>& labels,
                                         bool strict = true);

struct PairSpec {
  std::string anchor_id;
  std::string positive_id;
  std::string group;
};

//! Three tab-separated columns per line: anchor_id, positive_id, group.
std::vector<PairSpec> read_pairs(const std::string& path);

//! JSON manifest: {"fasta": ..., "labels": ..., "embeddings": ...}; relative
//! paths resolve against the manifest's directory.
struct DatabaseManifest {
  std::vector<ProteinRecord> records;
  std::string fasta_file;
  std::string label_file;
  std::string embedding_file;
};

DatabaseManifest load_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::string& fasta_file,
                    const std::string& label_file, const std::string& embedding_file);

//! A manifest's records with their hidden sets, aligned by index.
struct Database {
  std::vector<ProteinRecord> records;
  std::vector<HiddenSet> hidden;

  std::size_t index_of(const std::string& id) const;  // throws kUnknownId
};

//! Throws kUnknownId when a record has no entry in the embedding file.
Database load_database(const DatabaseManifest& manifest);

}  // namespace lateprot
