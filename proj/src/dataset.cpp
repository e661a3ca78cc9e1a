#include "fedmol/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <unordered_set>

namespace fedmol {

namespace {

constexpr std::string_view kMagic = "#fedmol-v1";

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string format_manifest_header(const DatasetManifest& manifest) {
  std::string out;
  out += kMagic;
  out += "\tF=" + std::to_string(manifest.fingerprint_bits) + "\n";
  out += "mol_id\tscaffold\tfp_hex";
  for (const auto& g : manifest.feature_groups) {
    out += "\tmeta:" + g.name;
    if (g.kind == FeatureKind::numeric) out += ":num";
  }
  out += "\n";
  return out;
}

}  // namespace

std::optional<std::size_t> DatasetManifest::group_index(const std::string& group) const {
  for (std::size_t i = 0; i < feature_groups.size(); ++i)
    if (feature_groups[i].name == group) return i;
  return std::nullopt;
}

DatasetError::DatasetError(Kind kind, std::size_t line, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) +
                         (line ? " at line " + std::to_string(line) : std::string()) + ": " +
                         what),
      kind_(kind),
      line_(line) {}

const char* to_string(DatasetError::Kind kind) {
  switch (kind) {
    case DatasetError::Kind::io: return "io error";
    case DatasetError::Kind::malformed_header: return "malformed header";
    case DatasetError::Kind::wrong_hex_length: return "wrong hex length";
    case DatasetError::Kind::bad_hex: return "bad hex";
    case DatasetError::Kind::duplicate_mol_id: return "duplicate mol_id";
    case DatasetError::Kind::column_count: return "inconsistent column count";
    case DatasetError::Kind::bad_numeric: return "bad numeric value";
    case DatasetError::Kind::empty_field: return "empty field";
    case DatasetError::Kind::inconsistent: return "inconsistent dataset";
  }
  return "dataset error";
}

std::optional<double> parse_numeric(const MetaValue& value) {
  if (!value) return std::nullopt;
  const std::string& s = *value;
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

Dataset read_dataset(const std::filesystem::path& path) {
  using K = DatasetError::Kind;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(K::io, 0, "cannot open " + path.string());

  Dataset ds;
  ds.manifest.name = path.stem().string();
  std::string line;

  if (!std::getline(in, line)) throw DatasetError(K::malformed_header, 1, "missing format line");
  {
    const auto cols = split_tabs(line);
    if (cols.size() != 2 || cols[0] != kMagic || !cols[1].starts_with("F="))
      throw DatasetError(K::malformed_header, 1, "expected '#fedmol-v1<TAB>F=<bits>'");
    std::size_t bits = 0;
    const auto num = cols[1].substr(2);
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), bits);
    if (ec != std::errc() || ptr != num.data() + num.size() || bits == 0 || bits % 4 != 0)
      throw DatasetError(K::malformed_header, 1, "F must be a positive multiple of 4");
    ds.manifest.fingerprint_bits = bits;
  }

  if (!std::getline(in, line)) throw DatasetError(K::malformed_header, 2, "missing column header");
  const auto header = split_tabs(line);
  if (header.size() < 3 || header[0] != "mol_id" || header[1] != "scaffold" ||
      header[2] != "fp_hex")
    throw DatasetError(K::malformed_header, 2, "expected 'mol_id<TAB>scaffold<TAB>fp_hex'");
  for (std::size_t c = 3; c < header.size(); ++c) {
    std::string_view col = header[c];
    if (!col.starts_with("meta:"))
      throw DatasetError(K::malformed_header, 2, "metadata column must start with 'meta:'");
    col.remove_prefix(5);
    FeatureGroup g;
    if (col.ends_with(":num")) {
      col.remove_suffix(4);
      g.kind = FeatureKind::numeric;
    }
    if (col.empty()) throw DatasetError(K::malformed_header, 2, "empty feature group name");
    g.name = std::string(col);
    if (ds.manifest.group_index(g.name))
      throw DatasetError(K::malformed_header, 2, "duplicate feature group '" + g.name + "'");
    ds.manifest.feature_groups.push_back(std::move(g));
  }

  const std::size_t n_cols = header.size();
  const std::size_t bits = ds.manifest.fingerprint_bits;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cols = split_tabs(line);
    if (cols.size() != n_cols)
      throw DatasetError(K::column_count, line_no,
                         "expected " + std::to_string(n_cols) + " columns, got " +
                             std::to_string(cols.size()));
    MoleculeRecord rec;
    rec.mol_id = std::string(cols[0]);
    rec.scaffold = std::string(cols[1]);
    if (rec.mol_id.empty()) throw DatasetError(K::empty_field, line_no, "empty mol_id");
    if (rec.scaffold.empty()) throw DatasetError(K::empty_field, line_no, "empty scaffold");
    if (cols[2].size() != bits / 4)
      throw DatasetError(K::wrong_hex_length, line_no,
                         "expected " + std::to_string(bits / 4) + " hex chars, got " +
                             std::to_string(cols[2].size()));
    try {
      rec.fingerprint = Fingerprint::from_hex(cols[2], bits);
    } catch (const std::invalid_argument& e) {
      throw DatasetError(K::bad_hex, line_no, e.what());
    }
    if (!seen.insert(rec.mol_id).second)
      throw DatasetError(K::duplicate_mol_id, line_no, "'" + rec.mol_id + "'");
    rec.metadata.reserve(n_cols - 3);
    for (std::size_t c = 3; c < n_cols; ++c) {
      const auto& group = ds.manifest.feature_groups[c - 3];
      if (cols[c] == "NA") {
        rec.metadata.emplace_back(std::nullopt);
        continue;
      }
      MetaValue v = std::string(cols[c]);
      if (group.kind == FeatureKind::numeric && !parse_numeric(v))
        throw DatasetError(K::bad_numeric, line_no,
                           "group '" + group.name + "' value '" + *v + "'");
      rec.metadata.push_back(std::move(v));
    }
    ds.records.push_back(std::move(rec));
  }
  ds.manifest.record_count = ds.records.size();
  return ds;
}

std::string format_dataset(const DatasetManifest& manifest,
                           const std::vector<MoleculeRecord>& records) {
  using K = DatasetError::Kind;
  if (manifest.fingerprint_bits == 0 || manifest.fingerprint_bits % 4 != 0)
    throw DatasetError(K::inconsistent, 0, "F must be a positive multiple of 4");
  std::string out = format_manifest_header(manifest);
  for (const auto& rec : records) {
    if (rec.fingerprint.size() != manifest.fingerprint_bits)
      throw DatasetError(K::inconsistent, 0, "fingerprint length mismatch for " + rec.mol_id);
    if (rec.metadata.size() != manifest.feature_groups.size())
      throw DatasetError(K::inconsistent, 0, "metadata arity mismatch for " + rec.mol_id);
    out += rec.mol_id;
    out += '\t';
    out += rec.scaffold;
    out += '\t';
    out += rec.fingerprint.to_hex();
    for (const auto& v : rec.metadata) {
      out += '\t';
      out += v ? *v : std::string("NA");
    }
    out += '\n';
  }
  return out;
}

void write_dataset(const DatasetManifest& manifest, const std::vector<MoleculeRecord>& records,
                   const std::filesystem::path& path) {
  const std::string text = format_dataset(manifest, records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(DatasetError::Kind::io, 0, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DatasetError(DatasetError::Kind::io, 0, "write failed for " + path.string());
}

std::string shard_file_name(const std::string& dataset, int client_id) {
  return dataset + ".client" + std::to_string(client_id) + ".tsv";
}

std::vector<ClientShard> read_shards(const std::filesystem::path& dir, const std::string& dataset,
                                     DatasetManifest* manifest_out) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw DatasetError(DatasetError::Kind::io, 0, "not a directory: " + dir.string());
  const std::regex pattern(R"((.*)\.client(\d+)\.tsv)");
  std::map<int, fs::path> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string fname = entry.path().filename().string();
    if (std::regex_match(fname, m, pattern) && m[1] == dataset)
      found.emplace(std::stoi(m[2]), entry.path());
  }
  if (found.empty())
    throw DatasetError(DatasetError::Kind::io, 0,
                       "no shards named " + dataset + ".client<k>.tsv in " + dir.string());
  std::vector<ClientShard> shards;
  std::optional<DatasetManifest> reference;
  for (const auto& [id, path] : found) {
    if (id != static_cast<int>(shards.size()))
      throw DatasetError(DatasetError::Kind::inconsistent, 0,
                         "shard ids must be contiguous from 0; missing client" +
                             std::to_string(shards.size()));
    Dataset ds = read_dataset(path);
    if (ds.records.empty())
      throw DatasetError(DatasetError::Kind::inconsistent, 0, "empty shard " + path.string());
    if (reference && (reference->fingerprint_bits != ds.manifest.fingerprint_bits ||
                      reference->feature_groups != ds.manifest.feature_groups))
      throw DatasetError(DatasetError::Kind::inconsistent, 0,
                         "shard " + path.string() + " disagrees with client0 header");
    if (!reference) reference = ds.manifest;
    shards.push_back(ClientShard{id, std::move(ds.records)});
  }
  if (manifest_out) {
    *manifest_out = *reference;
    manifest_out->name = dataset;
    manifest_out->record_count = 0;
    for (const auto& s : shards) manifest_out->record_count += s.size();
  }
  return shards;
}

}  // namespace fedmol
