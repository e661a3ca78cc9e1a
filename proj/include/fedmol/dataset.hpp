#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedmol/fingerprint.hpp"

namespace fedmol {

inline constexpr std::size_t kDefaultFingerprintBits = 2048;
inline constexpr const char* kNoScaffold = "NO_SCAFFOLD";

enum class FeatureKind { categorical, numeric };

struct FeatureGroup {
  std::string name;
  FeatureKind kind = FeatureKind::categorical;

  friend bool operator==(const FeatureGroup&, const FeatureGroup&) = default;
};

struct DatasetManifest {
  std::string name;
  std::size_t fingerprint_bits = kDefaultFingerprintBits;
  std::vector<FeatureGroup> feature_groups;
  std::size_t record_count = 0;

  /// Index of the named group, or nullopt.
  std::optional<std::size_t> group_index(const std::string& group) const;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// A metadata cell is kept in its textual form; nullopt is the literal NA.
/// Numeric groups are validated at read time and parsed on demand.
using MetaValue = std::optional<std::string>;

struct MoleculeRecord {
  std::string mol_id;
  Fingerprint fingerprint;
  std::string scaffold;
  std::vector<MetaValue> metadata;  // aligned with DatasetManifest::feature_groups

  friend bool operator==(const MoleculeRecord&, const MoleculeRecord&) = default;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<MoleculeRecord> records;
};

/// One FL client's private data.
struct ClientShard {
  int client_id = 0;
  std::vector<MoleculeRecord> records;

  std::size_t size() const noexcept { return records.size(); }
};

class DatasetError : public std::runtime_error {
 public:
  enum class Kind {
    io,
    malformed_header,
    wrong_hex_length,
    bad_hex,
    duplicate_mol_id,
    column_count,
    bad_numeric,
    empty_field,
    inconsistent,
  };

  DatasetError(Kind kind, std::size_t line, const std::string& what);

  Kind kind() const noexcept { return kind_; }
  /// 1-based line number; 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

const char* to_string(DatasetError::Kind kind);

Dataset read_dataset(const std::filesystem::path& path);

/// Byte-deterministic writer. Throws DatasetError on inconsistency or I/O failure.
void write_dataset(const DatasetManifest& manifest, const std::vector<MoleculeRecord>& records,
                   const std::filesystem::path& path);

/// Serialized form used by write_dataset.
std::string format_dataset(const DatasetManifest& manifest,
                           const std::vector<MoleculeRecord>& records);

/// Parses a numeric metadata cell. nullopt for NA or unparsable text.
std::optional<double> parse_numeric(const MetaValue& value);

/// Canonical shard file name: <dataset>.client<k>.tsv
std::string shard_file_name(const std::string& dataset, int client_id);

/// Loads every <dataset>.client<k>.tsv in `dir`, ordered by k; client ids
/// must be contiguous from 0.
std::vector<ClientShard> read_shards(const std::filesystem::path& dir, const std::string& dataset,
                                     DatasetManifest* manifest_out = nullptr);

}  // namespace fedmol
