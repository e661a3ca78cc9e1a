#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedmol/experiments.hpp"

namespace fedmol {

/// Long-format report row: dataset,method,setting,client,metric,value.
/// `client` is the client id or "mean" for the unweighted client average.
struct ReportRow {
  std::string dataset;
  std::string method;
  std::string setting;
  std::string client;
  std::string metric;
  MetricValue value;
};

inline constexpr const char* kReportHeader = "dataset,method,setting,client,metric,value";
inline constexpr const char* kClusterHeader = "dataset,method,setting,client,cluster,size,sf_icf,kld";

/// Shortest round-trip decimal; "NA" when missing, "inf"/"-inf" for infinities.
std::string format_value(const MetricValue& v);

/// Scalar rows for one client report in a fixed metric order.
std::vector<ReportRow> report_rows(const std::string& dataset, const std::string& method,
                                   const std::string& setting, const std::string& client,
                                   const MetricsReport& report);

/// Client-mean rows for every setting of an experiment.
std::vector<ReportRow> aggregate_rows(const ExperimentResult& result);

/// Rows for one client across the federated, centralized and random settings.
std::vector<ReportRow> client_rows(const ExperimentResult& result, int client);

/// Federated, centralized and random rows side by side (per client and mean).
std::vector<ReportRow> compare_federated_centralized(const ExperimentConfig& cfg,
                                                     const FederatedData& data);

struct ClusterRow {
  std::string dataset;
  std::string method;
  std::string setting;
  int client = 0;
  std::string cluster;  // cluster key
  std::size_t size = 0;
  double sf_icf = 0.0;  // per-cluster inner SF·ICF sum
  double kld = 0.0;     // scaffold KLD against the client's scaffold distribution
};

std::vector<ClusterRow> cluster_rows(const ExperimentResult& result);

std::string to_csv(const std::vector<ReportRow>& rows);
std::string to_csv(const std::vector<ClusterRow>& rows);

/// Quotes a CSV field when needed.
std::string csv_field(const std::string& s);

struct AssembledReport {
  std::filesystem::path long_format;  // every client and mean row
  std::filesystem::path clusters;     // per-cluster SF-ICF vs KLD
  std::size_t experiments = 0;
};

/// Concatenates every persisted experiment under `results_root` (sorted by
/// path) into `<out_dir>/report_long.csv` and `<out_dir>/report_clusters.csv`.
AssembledReport assemble_report(const std::filesystem::path& results_root,
                                const std::filesystem::path& out_dir);

/// Writes `text` to `path` (binary, truncating).
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fedmol
