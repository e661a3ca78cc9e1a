#include "fedmol/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fedmol/kmeans.hpp"
#include "fedmol/lsh.hpp"
#include "fedmol/pca.hpp"
#include "fedmol/report.hpp"
#include "fedmol/rng.hpp"

namespace fedmol {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool uses_k(Method m) {
  return m == Method::fed_kmeans || m == Method::fed_pca_kmeans || m == Method::random;
}
bool uses_rounds(Method m) { return m == Method::fed_kmeans || m == Method::fed_pca_kmeans; }
bool uses_p(Method m) { return m == Method::fed_pca_kmeans; }
bool uses_n_he(Method m) { return m == Method::fed_lsh; }

template <class T>
bool in_grid(const std::vector<T>& g, T v) {
  return std::find(g.begin(), g.end(), v) != g.end();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("config: bad value for '" + key + "': '" + s + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "': '" + s + "'");
}

}  // namespace

const std::vector<std::string>& default_ranking_metrics() {
  static const std::vector<std::string> m{"silhouette_euclidean", "davies_bouldin",
                                          "calinski_harabasz", "sf_icf"};
  return m;
}

bool higher_is_better(const std::string& metric) { return metric != "davies_bouldin"; }

ExperimentConfig ExperimentConfig::defaults_for(Method method, int n_clients) {
  ExperimentConfig cfg;
  cfg.method = method;
  cfg.n_clients = n_clients;
  const bool ten = n_clients == 10;
  switch (method) {
    case Method::fed_kmeans:
      cfg.k = ten ? 500 : 5;
      cfg.rounds = ten ? 10 : 3;
      break;
    case Method::fed_pca_kmeans:
      cfg.p = 5;
      cfg.k = 5;
      cfg.rounds = ten ? 5 : 3;
      break;
    case Method::fed_lsh: cfg.n_he = 32; break;
    default: break;
  }
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  switch (cfg.method) {
    case Method::fed_kmeans:
    case Method::fed_pca_kmeans:
    case Method::fed_lsh:
    case Method::random: break;
    default: fail("method must be fed-kmeans, fed-pca-kmeans, fed-lsh or random");
  }
  if (cfg.n_clients < 1) fail("clients must be >= 1");
  if (cfg.k < 1) fail("k must be >= 1");
  if (cfg.rounds < 1) fail("rounds must be >= 1");
  if (cfg.p < 1) fail("p must be >= 1");
  if (cfg.n_he < 1) fail("n_he must be >= 1");
  if (!(cfg.primary_fraction > 0.0 && cfg.primary_fraction <= 1.0)) fail("primary_fraction must be in (0, 1]");
  if (!(cfg.dirichlet_alpha > 0.0)) fail("alpha must be > 0");
  if (cfg.metrics.empty()) fail("metrics must not be empty");
  for (const auto& m : cfg.metrics)
    if (std::find(metric_names().begin(), metric_names().end(), m) == metric_names().end())
      fail("unknown metric '" + m + "'");
  if (cfg.unsafe_grid) return;
  if (!in_grid(grid::kClients, cfg.n_clients)) fail("clients must be 5 or 10 (use unsafe_grid to override)");
  if (uses_k(cfg.method) && !in_grid(grid::kK, cfg.k)) fail("k outside the grid {5,10,20,50,100,200,500}");
  if (uses_rounds(cfg.method) && !in_grid(grid::kRounds, cfg.rounds)) fail("rounds outside the grid {3,5,10}");
  if (uses_p(cfg.method) && !in_grid(grid::kP, cfg.p)) fail("p outside the grid {5,10,20,50}");
  if (uses_n_he(cfg.method) && !in_grid(grid::kNhe, cfg.n_he)) fail("n_he outside the grid {4,8,16,32}");
}

std::string canonical_settings(const ExperimentConfig& cfg) {
  std::string s;
  s += "method=" + std::string(to_string(cfg.method)) + "\n";
  s += "clients=" + std::to_string(cfg.n_clients) + "\n";
  if (uses_k(cfg.method)) s += "k=" + std::to_string(cfg.k) + "\n";
  if (uses_rounds(cfg.method)) s += "rounds=" + std::to_string(cfg.rounds) + "\n";
  if (uses_p(cfg.method)) s += "p=" + std::to_string(cfg.p) + "\n";
  if (uses_n_he(cfg.method)) s += "n_he=" + std::to_string(cfg.n_he) + "\n";
  s += "seed=" + std::to_string(cfg.seed) + "\n";
  s += "primary_fraction=" + fmt(cfg.primary_fraction) + "\n";
  s += "alpha=" + fmt(cfg.dirichlet_alpha) + "\n";
  return s;
}

std::string config_id(const ExperimentConfig& cfg) {
  const auto h = fnv1a64(canonical_settings(cfg));
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[static_cast<std::size_t>(15 - i)] = digits[(h >> (4 * i)) & 0xf];
  return out;
}

std::vector<ExperimentConfig> parse_config_text(const std::string& text) {
  ExperimentConfig base;
  std::vector<std::string> methods{std::string(to_string(base.method))};
  std::vector<int> clients{base.n_clients}, ks{base.k}, rounds{base.rounds}, ps{base.p};
  std::vector<std::size_t> n_hes{base.n_he};
  std::vector<std::uint64_t> seeds{base.seed};
  std::set<std::string> seen_keys;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!seen_keys.insert(key).second)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    auto ints = [&](auto& out) {
      using T = typename std::decay_t<decltype(out)>::value_type;
      out.clear();
      for (const auto& item : split_list(value)) out.push_back(parse_number<T>(key, item));
      if (out.empty()) throw std::invalid_argument("config: empty list for '" + key + "'");
    };
    if (key == "dataset") base.dataset = value;
    else if (key == "input") base.input = value;
    else if (key == "shards_dir") base.shards_dir = value;
    else if (key == "clients") ints(clients);
    else if (key == "method") methods = split_list(value);
    else if (key == "k") ints(ks);
    else if (key == "rounds") ints(rounds);
    else if (key == "p") ints(ps);
    else if (key == "n_he") ints(n_hes);
    else if (key == "seed") ints(seeds);
    else if (key == "primary_fraction") base.primary_fraction = parse_number<double>(key, value);
    else if (key == "alpha") base.dirichlet_alpha = parse_number<double>(key, value);
    else if (key == "metrics") base.metrics = split_list(value);
    else if (key == "unsafe_grid") base.unsafe_grid = parse_bool(key, value);
    else throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }

  std::vector<ExperimentConfig> out;
  std::set<std::string> ids;
  for (const auto& name : methods) {
    const auto method = parse_method(name);
    if (!method) throw std::invalid_argument("config: unknown method '" + name + "'");
    const std::vector<int> one_int{0};
    const std::vector<std::size_t> one_size{0};
    for (int c : clients)
      for (auto seed : seeds)
        for (int k : uses_k(*method) ? ks : one_int)
          for (int r : uses_rounds(*method) ? rounds : one_int)
            for (int p : uses_p(*method) ? ps : one_int)
              for (std::size_t nh : uses_n_he(*method) ? n_hes : one_size) {
                ExperimentConfig cfg = base;
                cfg.method = *method;
                cfg.n_clients = c;
                cfg.seed = seed;
                if (uses_k(*method)) cfg.k = k;
                if (uses_rounds(*method)) cfg.rounds = r;
                if (uses_p(*method)) cfg.p = p;
                if (uses_n_he(*method)) cfg.n_he = nh;
                validate(cfg);
                if (ids.insert(config_id(cfg)).second) out.push_back(std::move(cfg));
              }
  }
  return out;
}

std::vector<ExperimentConfig> load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfgs = parse_config_text(ss.str());
  // Relative data paths resolve against the config file's directory.
  const auto dir = path.parent_path();
  for (auto& c : cfgs) {
    if (!c.input.empty() && c.input.is_relative()) c.input = dir / c.input;
    if (!c.shards_dir.empty() && c.shards_dir.is_relative()) c.shards_dir = dir / c.shards_dir;
  }
  return cfgs;
}

FederatedData load_data(const ExperimentConfig& cfg) {
  FederatedData data;
  if (!cfg.shards_dir.empty()) {
    data.shards = read_shards(cfg.shards_dir, cfg.dataset, &data.manifest);
    if (static_cast<int>(data.shards.size()) != cfg.n_clients)
      throw std::invalid_argument("found " + std::to_string(data.shards.size()) + " shards for " +
                                  cfg.dataset + " but clients=" + std::to_string(cfg.n_clients));
    return data;
  }
  if (cfg.input.empty()) throw std::invalid_argument("config: one of input or shards_dir is required");
  Dataset ds = read_dataset(cfg.input);
  data.manifest = ds.manifest;
  data.manifest.name = cfg.dataset;
  if (cfg.n_clients == 1) {
    data.shards.push_back(ClientShard{0, std::move(ds.records)});
    return data;
  }
  PartitionConfig pc{cfg.n_clients, cfg.primary_fraction, cfg.dirichlet_alpha, cfg.seed};
  data.shards = soft_split(ds.records, pc);
  return data;
}

const SettingResult& ExperimentResult::setting(const std::string& name) const {
  if (name == "federated") return federated;
  if (name == "centralized") return centralized;
  if (name == "random") return random;
  throw std::invalid_argument("unknown setting '" + name + "'");
}

namespace {

std::vector<ClusterAssignment> split_pooled(const ClusterAssignment& pooled,
                                            const std::vector<std::size_t>& offsets, Method method) {
  std::vector<ClusterAssignment> out;
  for (std::size_t c = 0; c + 1 < offsets.size(); ++c) {
    std::vector<int> ids(pooled.labels.begin() + static_cast<std::ptrdiff_t>(offsets[c]),
                         pooled.labels.begin() + static_cast<std::ptrdiff_t>(offsets[c + 1]));
    auto a = assignment_from_ids(ids, method, pooled.provenance);
    if (!pooled.cluster_keys.empty())
      for (auto& key : a.cluster_keys) key = pooled.cluster_keys.at(static_cast<std::size_t>(std::stoi(key)));
    out.push_back(std::move(a));
  }
  return out;
}

Method centralized_of(Method m) {
  switch (m) {
    case Method::fed_kmeans: return Method::centralized_kmeans;
    case Method::fed_pca_kmeans: return Method::centralized_pca_kmeans;
    case Method::fed_lsh: return Method::centralized_lsh;
    default: return m;
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const FederatedData& data) {
  validate(cfg);
  const auto& shards = data.shards;
  if (static_cast<int>(shards.size()) != cfg.n_clients)
    throw std::invalid_argument("run_experiment: " + std::to_string(shards.size()) +
                                " shards for clients=" + std::to_string(cfg.n_clients));
  for (const auto& s : shards)
    if (s.records.empty()) throw std::invalid_argument("run_experiment: empty shard");

  ExperimentResult res;
  res.cfg = cfg;
  res.id = config_id(cfg);
  res.manifest = data.manifest;
  res.federated.setting = "federated";
  res.centralized.setting = "centralized";
  res.random.setting = "random";

  std::vector<MoleculeRecord> pooled;
  std::vector<std::size_t> offsets{0};
  for (const auto& s : shards) {
    pooled.insert(pooled.end(), s.records.begin(), s.records.end());
    offsets.push_back(pooled.size());
  }
  std::vector<Matrix> raw;
  for (const auto& s : shards) raw.push_back(to_points(s.records));

  std::vector<Matrix> fed_space = raw, central_space = raw;
  FeatureSpace space = FeatureSpace::raw;
  KMeansConfig kcfg{cfg.k, cfg.rounds, cfg.seed, 1, false};

  switch (cfg.method) {
    case Method::fed_kmeans: {
      res.federated.assignments = fed_kmeans(std::span<const Matrix>(raw), kcfg).assignments;
      Matrix all = to_points(pooled);
      res.centralized.assignments =
          split_pooled(centralized_kmeans(all, cfg.k, cfg.rounds, cfg.seed).assignment, offsets,
                       Method::centralized_kmeans);
      break;
    }
    case Method::fed_pca_kmeans: {
      space = FeatureSpace::pca_projected;
      auto fpk = fed_pca_kmeans(std::span<const ClientShard>(shards), cfg.p, kcfg);
      res.federated.assignments = std::move(fpk.kmeans.assignments);
      fed_space = std::move(fpk.projected);
      const auto proj = centralized_pca(pooled, cfg.p);
      const Matrix all = project(pooled, proj);
      central_space.clear();
      for (const auto& s : shards) central_space.push_back(project(s.records, proj));
      res.centralized.assignments =
          split_pooled(centralized_kmeans(all, cfg.k, cfg.rounds, cfg.seed).assignment, offsets,
                       Method::centralized_pca_kmeans);
      break;
    }
    case Method::fed_lsh: {
      res.federated.assignments = fed_lsh(std::span<const ClientShard>(shards), FedLshConfig{cfg.n_he}).assignments;
      res.centralized.assignments =
          split_pooled(centralized_lsh(pooled, cfg.n_he), offsets, Method::centralized_lsh);
      break;
    }
    case Method::random: {
      for (std::size_t c = 0; c < shards.size(); ++c)
        res.federated.assignments.push_back(random_assignment(
            shards[c].size(), cfg.k, derive_seed(cfg.seed, {0x5eedULL, static_cast<std::uint64_t>(c)})));
      res.centralized.assignments = res.federated.assignments;
      res.random.assignments = res.federated.assignments;
      break;
    }
    default: throw std::invalid_argument("run_experiment: unsupported method");
  }
  for (auto& a : res.centralized.assignments) a.method = centralized_of(cfg.method);

  if (cfg.method != Method::random)
    for (std::size_t c = 0; c < shards.size(); ++c)
      res.random.assignments.push_back(random_assignment(
          shards[c].size(), res.federated.assignments[c].n_clusters(),
          derive_seed(cfg.seed, {0x5eedULL, static_cast<std::uint64_t>(c)})));

  for (std::size_t c = 0; c < shards.size(); ++c) {
    const auto& recs = shards[c].records;
    res.client_scaffolds.push_back(scaffolds_of(recs));
    res.federated.reports.push_back(evaluate(data.manifest, recs, res.federated.assignments[c], fed_space[c], space));
    res.centralized.reports.push_back(
        evaluate(data.manifest, recs, res.centralized.assignments[c], central_space[c], space));
    res.random.reports.push_back(evaluate(data.manifest, recs, res.random.assignments[c], fed_space[c], space));
  }
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  return run_experiment(cfg, load_data(cfg));
}

std::filesystem::path result_dir(const std::filesystem::path& root, const ExperimentResult& result) {
  return root / result.cfg.dataset / std::string(to_string(result.cfg.method)) / result.id;
}

std::filesystem::path persist(const ExperimentResult& result, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const fs::path dir = result_dir(root, result);
  fs::path staging = dir;
  staging += ".staging";
  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    write_text(staging / "config.txt", "dataset=" + result.cfg.dataset + "\n" + canonical_settings(result.cfg));
    for (int c = 0; c < result.cfg.n_clients; ++c)
      write_text(staging / ("client" + std::to_string(c) + ".csv"), to_csv(client_rows(result, c)));
    write_text(staging / "aggregate.csv", to_csv(aggregate_rows(result)));
    write_text(staging / "clusters.csv", to_csv(cluster_rows(result)));
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
  fs::remove_all(dir);
  fs::rename(staging, dir);
  return dir;
}

namespace {

// Ranks 1..n, ties share their mean rank, missing values rank last.
std::vector<double> rank_slice(const std::vector<MetricValue>& values, bool higher_better) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto key_less = [&](std::size_t a, std::size_t b) {
    const auto& va = values[a];
    const auto& vb = values[b];
    if (!va || !vb) return va.has_value() && !vb.has_value();
    return higher_better ? *va > *vb : *va < *vb;
  };
  std::stable_sort(order.begin(), order.end(), key_less);
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && !key_less(order[i], order[j + 1]) && !key_less(order[j + 1], order[i])) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

RankTable rank_configs(std::span<const ScoredConfig> scored, const std::vector<std::string>& metrics) {
  RankTable table;
  if (metrics.empty()) throw std::invalid_argument("rank_configs: no metrics");

  // method -> dataset -> config id -> reports
  std::map<std::string, std::map<std::string, std::map<std::string, const ScoredConfig*>>> groups;
  for (const auto& s : scored) {
    const auto id = config_id(s.cfg);
    const std::string method(to_string(s.cfg.method));
    auto& slot = groups[method][s.dataset][id];
    if (slot) throw std::invalid_argument("rank_configs: duplicate config " + id + " for " + s.dataset);
    slot = &s;
    table.configs.emplace(id, s.cfg);
  }

  for (const auto& [method, datasets] : groups) {
    // config id -> per-dataset means
    std::map<std::string, std::vector<double>> dataset_means;
    std::map<std::string, std::vector<double>> cluster_counts;
    for (const auto& [dataset, configs] : datasets) {
      std::size_t n_clients = 0;
      for (const auto& [id, s] : configs) n_clients = std::max(n_clients, s->reports.size());
      std::map<std::string, std::vector<std::vector<double>>> ranks;  // id -> client -> metric ranks
      for (const auto& [id, s] : configs) ranks[id].assign(n_clients, {});
      for (std::size_t client = 0; client < n_clients; ++client)
        for (const auto& metric : metrics) {
          std::vector<MetricValue> values;
          std::vector<std::string> ids;
          for (const auto& [id, s] : configs) {
            ids.push_back(id);
            values.push_back(client < s->reports.size() ? metric_value(s->reports[client], metric)
                                                         : MetricValue{});
          }
          const auto r = rank_slice(values, higher_is_better(metric));
          for (std::size_t i = 0; i < ids.size(); ++i) {
            ranks[ids[i]][client].push_back(r[i]);
            table.entries.push_back({ids[i], dataset, metric, static_cast<int>(client), values[i], r[i]});
          }
        }
      for (const auto& [id, per_client] : ranks) {
        double sum_clients = 0.0;
        for (const auto& per_metric : per_client) {
          double m = 0.0;
          for (double r : per_metric) m += r;
          sum_clients += m / static_cast<double>(per_metric.size());
        }
        dataset_means[id].push_back(sum_clients / static_cast<double>(per_client.size()));
        const auto* s = configs.at(id);
        double clusters = 0.0;
        for (const auto& rep : s->reports) clusters += rep.cluster_stats.n_clusters;
        cluster_counts[id].push_back(s->reports.empty() ? 0.0 : clusters / static_cast<double>(s->reports.size()));
      }
    }

    std::string best;
    for (const auto& [id, means] : dataset_means) {
      double m = 0.0;
      for (double v : means) m += v;
      table.mean_rank[id] = m / static_cast<double>(means.size());
      double c = 0.0;
      for (double v : cluster_counts[id]) c += v;
      table.mean_clusters[id] = c / static_cast<double>(cluster_counts[id].size());
      if (best.empty()) {
        best = id;
        continue;
      }
      const auto& a = table.configs.at(id);
      const auto& b = table.configs.at(best);
      const auto key = [&](const std::string& cid, const ExperimentConfig& cfg) {
        return std::make_tuple(table.mean_rank.at(cid), table.mean_clusters.at(cid), cfg.k, cfg.p, cfg.n_he, cid);
      };
      if (key(id, a) < key(best, b)) best = id;
    }
    table.best[method] = best;
  }
  return table;
}

GridResult grid_search(const std::vector<ExperimentConfig>& grid) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
  GridResult out;
  std::map<std::string, FederatedData> cache;
  std::vector<ScoredConfig> scored;
  for (const auto& cfg : grid) {
    validate(cfg);
    const std::string source = cfg.dataset + "\n" + cfg.input.string() + "\n" + cfg.shards_dir.string() +
                               "\n" + std::to_string(cfg.n_clients) + "\n" + std::to_string(cfg.seed) +
                               "\n" + fmt(cfg.primary_fraction) + "\n" + fmt(cfg.dirichlet_alpha);
    auto it = cache.find(source);
    if (it == cache.end()) it = cache.emplace(source, load_data(cfg)).first;
    out.runs.push_back(run_experiment(cfg, it->second));
    scored.push_back(ScoredConfig{cfg, cfg.dataset, out.runs.back().federated.reports});
  }
  out.table = rank_configs(scored, grid.front().metrics);
  return out;
}

}  // namespace fedmol
