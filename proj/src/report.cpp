#include "fedmol/report.hpp"

#include <charconv>
#include <cmath>
#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fedmol {

namespace {

const std::vector<std::string>& extra_names() {
  static const std::vector<std::string> n{"n_clusters", "min_cluster_size", "max_cluster_size",
                                          "mean_cluster_size"};
  return n;
}

MetricValue scalar(const MetricsReport& r, const std::string& name) {
  if (name == "min_cluster_size") return static_cast<double>(r.cluster_stats.min_size);
  if (name == "max_cluster_size") return static_cast<double>(r.cluster_stats.max_size);
  return metric_value(r, name);
}

std::vector<std::string> row_names(const MetricsReport& r) {
  std::vector<std::string> names = metric_names();
  names.insert(names.end(), extra_names().begin(), extra_names().end());
  for (const auto& [group, v] : r.per_feature_group_ficf) names.push_back("ficf:" + group);
  return names;
}

MetricValue mean_of(const std::vector<MetricsReport>& reports, const std::string& name) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : reports)
    if (const auto v = scalar(r, name)) {
      sum += *v;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

std::string format_value(const MetricValue& v) {
  if (!v) return "NA";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  if (std::isnan(*v)) return "NA";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, ptr);
}

std::vector<ReportRow> report_rows(const std::string& dataset, const std::string& method,
                                   const std::string& setting, const std::string& client,
                                   const MetricsReport& report) {
  std::vector<ReportRow> rows;
  for (const auto& name : row_names(report))
    rows.push_back({dataset, method, setting, client, name, scalar(report, name)});
  return rows;
}

std::vector<ReportRow> aggregate_rows(const ExperimentResult& result) {
  std::vector<ReportRow> rows;
  const std::string method(to_string(result.cfg.method));
  for (const auto* s : {&result.federated, &result.centralized, &result.random}) {
    if (s->reports.empty()) continue;
    for (const auto& name : row_names(s->reports.front()))
      rows.push_back({result.cfg.dataset, method, s->setting, "mean", name, mean_of(s->reports, name)});
  }
  return rows;
}

std::vector<ReportRow> client_rows(const ExperimentResult& result, int client) {
  std::vector<ReportRow> rows;
  const std::string method(to_string(result.cfg.method));
  for (const auto* s : {&result.federated, &result.centralized, &result.random}) {
    const auto& r = s->reports.at(static_cast<std::size_t>(client));
    auto part = report_rows(result.cfg.dataset, method, s->setting, std::to_string(client), r);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::vector<ReportRow> compare_federated_centralized(const ExperimentConfig& cfg,
                                                     const FederatedData& data) {
  const auto result = run_experiment(cfg, data);
  std::vector<ReportRow> rows;
  for (int c = 0; c < cfg.n_clients; ++c) {
    auto part = client_rows(result, c);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  auto agg = aggregate_rows(result);
  rows.insert(rows.end(), agg.begin(), agg.end());
  return rows;
}

std::vector<ClusterRow> cluster_rows(const ExperimentResult& result) {
  std::vector<ClusterRow> rows;
  const std::string method(to_string(result.cfg.method));
  for (const auto* s : {&result.federated, &result.centralized, &result.random}) {
    for (std::size_t c = 0; c < s->assignments.size(); ++c) {
      const auto& a = s->assignments[c];
      const auto& scaf = result.client_scaffolds.at(c);
      const auto sf = per_cluster_sf_icf(scaf, a.labels);
      const auto kld = per_cluster_kld(scaf, a.labels);
      std::map<int, std::size_t> sizes;
      for (int l : a.labels) ++sizes[l];
      for (const auto& [label, size] : sizes) {
        const auto idx = static_cast<std::size_t>(label);
        rows.push_back({result.cfg.dataset, method, s->setting, static_cast<int>(c),
                        idx < a.cluster_keys.size() ? a.cluster_keys[idx] : std::to_string(label), size,
                        sf.at(label), kld.at(label)});
      }
    }
  }
  return rows;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::string to_csv(const std::vector<ReportRow>& rows) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& r : rows)
    out += csv_field(r.dataset) + "," + csv_field(r.method) + "," + r.setting + "," + r.client + "," +
           csv_field(r.metric) + "," + format_value(r.value) + "\n";
  return out;
}

std::string to_csv(const std::vector<ClusterRow>& rows) {
  std::string out = std::string(kClusterHeader) + "\n";
  for (const auto& r : rows)
    out += csv_field(r.dataset) + "," + csv_field(r.method) + "," + r.setting + "," +
           std::to_string(r.client) + "," + csv_field(r.cluster) + "," + std::to_string(r.size) + "," +
           format_value(r.sf_icf) + "," + format_value(r.kld) + "\n";
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

void append_body(const std::filesystem::path& file, std::string& out) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (!line.empty()) out += line + "\n";
  }
}

}  // namespace

AssembledReport assemble_report(const std::filesystem::path& results_root,
                                 const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(results_root))
    throw std::runtime_error("results directory not found: " + results_root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::recursive_directory_iterator(results_root))
    if (e.is_regular_file() && e.path().filename() == "aggregate.csv") {
      const auto dir = e.path().parent_path();
      if (dir.filename().string().ends_with(".staging")) continue;
      dirs.push_back(dir);
    }
  std::sort(dirs.begin(), dirs.end());

  std::string long_csv = std::string(kReportHeader) + "\n";
  std::string cluster_csv = std::string(kClusterHeader) + "\n";
  for (const auto& dir : dirs) {
    for (int c = 0;; ++c) {
      const auto f = dir / ("client" + std::to_string(c) + ".csv");
      if (!fs::exists(f)) break;
      append_body(f, long_csv);
    }
    append_body(dir / "aggregate.csv", long_csv);
    if (fs::exists(dir / "clusters.csv")) append_body(dir / "clusters.csv", cluster_csv);
  }

  AssembledReport rep;
  rep.experiments = dirs.size();
  fs::create_directories(out_dir);
  rep.long_format = out_dir / "report_long.csv";
  rep.clusters = out_dir / "report_clusters.csv";
  write_text(rep.long_format, long_csv);
  write_text(rep.clusters, cluster_csv);
  return rep;
}

}  // namespace fedmol
