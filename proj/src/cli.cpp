#include "fedmol/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "fedmol/dataset.hpp"
#include "fedmol/experiments.hpp"
#include "fedmol/explain.hpp"
#include "fedmol/federation.hpp"
#include "fedmol/partitioner.hpp"
#include "fedmol/pca.hpp"
#include "fedmol/report.hpp"
#include "fedmol/synthetic.hpp"

namespace fedmol {

namespace fs = std::filesystem;

namespace {

struct CliError : std::runtime_error {
  std::string code;
  CliError(std::string c, const std::string& msg) : std::runtime_error(msg), code(std::move(c)) {}
};

// Writes to a sibling temporary and renames, so readers never see a partial file.
void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  write_text(tmp, text);
  fs::rename(tmp, path);
}

fs::path results_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FEDMOL_RESULTS_DIR"); env && *env) return env;
  return "results";
}

struct ExperimentOptions {
  std::string input, shards_dir, dataset, method = "fed-kmeans", metrics, results_dir;
  int clients = 5, k = 5, rounds = 3, p = 5;
  std::size_t n_he = 32;
  std::uint64_t seed = 0;
  double primary_fraction = 0.9, alpha = 50.0;
  bool unsafe_grid = false;
  CLI::Option *clients_opt{}, *k_opt{}, *rounds_opt{}, *p_opt{}, *n_he_opt{};
};

void add_experiment_options(CLI::App* sub, ExperimentOptions& o) {
  auto* in = sub->add_option("--input,-i", o.input, "Pooled dataset (partitioned on the fly)");
  auto* sd = sub->add_option("--shards-dir", o.shards_dir, "Directory of <dataset>.client<k>.tsv shards");
  in->excludes(sd);
  sub->add_option("--dataset", o.dataset, "Dataset name (default: input stem or shard prefix)");
  sub->add_option("--method", o.method, "fed-kmeans | fed-pca-kmeans | fed-lsh | random")->capture_default_str();
  o.clients_opt = sub->add_option("--clients", o.clients, "Number of clients")->capture_default_str();
  o.k_opt = sub->add_option("--k", o.k, "Number of clusters");
  o.rounds_opt = sub->add_option("--rounds", o.rounds, "Federation rounds");
  o.p_opt = sub->add_option("--p", o.p, "PCA components");
  o.n_he_opt = sub->add_option("--n-he", o.n_he, "High-entropy bits per client");
  sub->add_option("--seed", o.seed, "Seed")->capture_default_str();
  sub->add_option("--primary-fraction", o.primary_fraction, "Primary-client share")->capture_default_str();
  sub->add_option("--alpha", o.alpha, "Dirichlet concentration")->capture_default_str();
  sub->add_option("--metrics", o.metrics, "Comma-separated ranking metrics");
  sub->add_flag("--unsafe-grid", o.unsafe_grid, "Allow hyperparameters outside the benchmark grid");
  sub->add_option("--results-dir", o.results_dir, "Results root (default $FEDMOL_RESULTS_DIR or ./results)");
}

std::string infer_dataset_name(const fs::path& shards_dir) {
  std::vector<std::string> names;
  if (fs::is_directory(shards_dir))
    for (const auto& e : fs::directory_iterator(shards_dir)) {
      const auto f = e.path().filename().string();
      const std::string suffix = ".client0.tsv";
      if (f.size() > suffix.size() && f.ends_with(suffix)) names.push_back(f.substr(0, f.size() - suffix.size()));
    }
  if (names.size() != 1)
    throw CliError("config", "cannot infer --dataset in " + shards_dir.string() + " (found " +
                                 std::to_string(names.size()) + " candidates)");
  return names.front();
}

std::size_t count_shards(const fs::path& dir, const std::string& dataset) {
  std::size_t n = 0;
  while (fs::exists(dir / shard_file_name(dataset, static_cast<int>(n)))) ++n;
  return n;
}

ExperimentConfig to_config(const ExperimentOptions& o) {
  const auto method = parse_method(o.method);
  if (!method) throw CliError("config", "unknown method '" + o.method + "'");
  if (o.input.empty() && o.shards_dir.empty()) throw CliError("usage", "one of --input or --shards-dir is required");
  std::string dataset = o.dataset;
  if (dataset.empty())
    dataset = !o.input.empty() ? fs::path(o.input).stem().string() : infer_dataset_name(o.shards_dir);
  int clients = o.clients;
  if (!o.shards_dir.empty() && o.clients_opt->count() == 0)
    clients = static_cast<int>(count_shards(o.shards_dir, dataset));
  if (clients < 1) throw CliError("dataset", "no shards for '" + dataset + "' in " + o.shards_dir);

  auto cfg = ExperimentConfig::defaults_for(*method, clients);
  cfg.dataset = dataset;
  cfg.input = o.input;
  cfg.shards_dir = o.shards_dir;
  if (o.k_opt->count()) cfg.k = o.k;
  if (o.rounds_opt->count()) cfg.rounds = o.rounds;
  if (o.p_opt->count()) cfg.p = o.p;
  if (o.n_he_opt->count()) cfg.n_he = o.n_he;
  cfg.seed = o.seed;
  cfg.primary_fraction = o.primary_fraction;
  cfg.dirichlet_alpha = o.alpha;
  cfg.unsafe_grid = o.unsafe_grid;
  if (!o.metrics.empty()) {
    cfg.metrics.clear();
    std::stringstream ss(o.metrics);
    std::string m;
    while (std::getline(ss, m, ','))
      if (!m.empty()) cfg.metrics.push_back(m);
  }
  validate(cfg);
  return cfg;
}

void require_client(int client, const ExperimentConfig& cfg) {
  if (client < 0 || client >= cfg.n_clients)
    throw CliError("config", "--client must be in [0, " + std::to_string(cfg.n_clients) + ")");
}

std::string fmt(double v) { return format_value(v); }

// --- subcommands ---

int cmd_generate(const SyntheticSpec& spec, const std::string& output, const std::string& name,
                 std::ostream& out) {
  auto ds = generate_synthetic(spec);
  ds.manifest.name = name.empty() ? fs::path(output).stem().string() : name;
  write_atomic(output, format_dataset(ds.manifest, ds.records));
  out << "wrote " << ds.records.size() << " records to " << output << "\n";
  return 0;
}

int cmd_partition(const std::string& input, const PartitionConfig& pc, const std::string& out_dir,
                  std::string dataset, std::ostream& out) {
  const auto ds = read_dataset(input);
  if (dataset.empty()) dataset = fs::path(input).stem().string();
  const auto shards = soft_split(ds.records, pc);
  std::vector<std::pair<fs::path, std::string>> files;
  for (const auto& s : shards) {
    auto manifest = ds.manifest;
    manifest.name = dataset;
    files.emplace_back(fs::path(out_dir) / shard_file_name(dataset, s.client_id), format_dataset(manifest, s.records));
  }
  for (const auto& [path, text] : files) write_atomic(path, text);
  out << "wrote " << shards.size() << " shards to " << out_dir << "\n";
  return 0;
}

void print_summary(const ExperimentResult& r, std::ostream& out) {
  for (const auto* s : {&r.federated, &r.centralized, &r.random}) {
    out << s->setting;
    for (const auto& m : metric_names()) out << " " << m << "=" << format_value(mean_metric(s->reports, m));
    out << " n_clusters=" << format_value(mean_metric(s->reports, "n_clusters")) << "\n";
  }
}

int cmd_run(const ExperimentOptions& o, const std::string& config_file, std::ostream& out) {
  const auto root = results_root(o.results_dir);
  std::vector<ExperimentConfig> cfgs;
  if (!config_file.empty()) {
    cfgs = load_config_file(config_file);
    if (cfgs.size() != 1)
      throw CliError("config", "run expects a config with exactly one setting (got " + std::to_string(cfgs.size()) +
                                   "); use grid");
  } else {
    cfgs.push_back(to_config(o));
  }
  const auto result = run_experiment(cfgs.front());
  const auto dir = persist(result, root);
  out << dir.string() << "\n";
  print_summary(result, out);
  return 0;
}

int cmd_grid(const std::string& config_file, const std::string& results_dir, std::ostream& out) {
  const auto root = results_root(results_dir);
  const auto cfgs = load_config_file(config_file);
  const auto grid = grid_search(cfgs);
  for (const auto& r : grid.runs) persist(r, root);

  std::string ranks = "config_id,dataset,metric,client,value,rank\n";
  for (const auto& e : grid.table.entries)
    ranks += e.config_id + "," + csv_field(e.dataset) + "," + e.metric + "," + std::to_string(e.client) + "," +
             format_value(e.value) + "," + fmt(e.rank) + "\n";
  std::string summary = "method,config_id,mean_rank,mean_clusters,best,settings\n";
  for (const auto& [id, mr] : grid.table.mean_rank) {
    const auto& cfg = grid.table.configs.at(id);
    const std::string method(to_string(cfg.method));
    std::string settings = canonical_settings(cfg);
    for (auto& ch : settings)
      if (ch == '\n') ch = ';';
    summary += method + "," + id + "," + fmt(mr) + "," + fmt(grid.table.mean_clusters.at(id)) + "," +
               (grid.table.best.at(method) == id ? "1" : "0") + "," + csv_field(settings) + "\n";
  }
  const auto grid_dir = root / "grid";
  write_atomic(grid_dir / "ranks.csv", ranks);
  write_atomic(grid_dir / "summary.csv", summary);
  for (const auto& [method, id] : grid.table.best)
    out << "best " << method << " " << id << " mean_rank=" << fmt(grid.table.mean_rank.at(id)) << "\n";
  return 0;
}

int cmd_explain(const ExperimentOptions& o, int client, const std::string& out_dir_flag, int n_trees,
                std::ostream& out) {
  const auto cfg = to_config(o);
  require_client(client, cfg);
  const auto data = load_data(cfg);
  const auto result = run_experiment(cfg, data);
  const auto& shard = data.shards.at(static_cast<std::size_t>(client));
  const auto& assignment = result.federated.assignments.at(static_cast<std::size_t>(client));
  const fs::path out_dir = out_dir_flag.empty() ? result_dir(results_root(o.results_dir), result) / "explain"
                                                : fs::path(out_dir_flag);

  RandomForestConfig rf;
  rf.n_trees = n_trees;
  rf.seed = cfg.seed;
  const auto importance = rf_feature_group_importance(data.manifest, shard.records, assignment, rf);
  std::string imp = "client,group,rf_importance,x_f_icf\n";
  for (const auto& [group, v] : ranked(importance))
    imp += std::to_string(client) + "," + csv_field(group) + "," + fmt(v) + "," +
           fmt(x_f_icf(data.manifest, shard.records, assignment.labels, group)) + "\n";

  std::string sharing = "client,group,unique_values,mean_sharing,min_sharing,max_sharing\n";
  for (const auto& s : feature_sharing_statistics(data.manifest, shard.records))
    sharing += std::to_string(client) + "," + csv_field(s.group) + "," + std::to_string(s.unique_values) + "," +
               fmt(s.mean_sharing) + "," + std::to_string(s.min_sharing) + "," + std::to_string(s.max_sharing) +
               "\n";

  const auto stats = cluster_statistics(assignment.labels);
  const auto oc = overclustering_flag(assignment, data.manifest, shard.records);
  std::string clusters = "client,n_clusters,min_size,max_size,mean_size,mean_scaffold_sharing,ratio,overclustering\n";
  clusters += std::to_string(client) + "," + std::to_string(stats.n_clusters) + "," +
              std::to_string(stats.min_size) + "," + std::to_string(stats.max_size) + "," + fmt(stats.mean_size) +
              "," + fmt(oc.mean_group_sharing) + "," + fmt(oc.ratio) + "," + (oc.flagged ? "1" : "0") + "\n";

  const std::string prefix = "client" + std::to_string(client) + "_";
  write_atomic(out_dir / (prefix + "importance.csv"), imp);
  write_atomic(out_dir / (prefix + "sharing.csv"), sharing);
  write_atomic(out_dir / (prefix + "clusters.csv"), clusters);
  out << out_dir.string() << "\n";
  for (const auto& [group, v] : ranked(importance)) out << group << " " << fmt(v) << "\n";
  return 0;
}

int cmd_project(const ExperimentOptions& o, int client, const std::string& output, std::ostream& out) {
  const auto cfg = to_config(o);
  require_client(client, cfg);
  const auto data = load_data(cfg);
  const auto pca = fed_pca(std::span<const ClientShard>(data.shards), 3);
  const auto result = run_experiment(cfg, data);
  const auto& shard = data.shards.at(static_cast<std::size_t>(client));
  const auto& coords = pca.projected.at(static_cast<std::size_t>(client));
  const auto& a = result.federated.assignments.at(static_cast<std::size_t>(client));
  std::string csv = "mol_id,pc1,pc2,pc3,cluster\n";
  for (std::size_t i = 0; i < shard.records.size(); ++i) {
    const auto label = static_cast<std::size_t>(a.labels[i]);
    csv += csv_field(shard.records[i].mol_id);
    for (Eigen::Index c = 0; c < 3; ++c)
      csv += "," + (c < coords.cols() ? fmt(coords(static_cast<Eigen::Index>(i), c)) : std::string("0"));
    csv += "," + csv_field(label < a.cluster_keys.size() ? a.cluster_keys[label] : std::to_string(label)) + "\n";
  }
  if (output.empty() || output == "-") {
    out << csv;
  } else {
    write_atomic(output, csv);
    out << "wrote " << shard.records.size() << " rows to " << output << "\n";
  }
  return 0;
}

int cmd_report(const std::string& results_dir, const std::string& out_dir, std::ostream& out) {
  const auto root = results_root(results_dir);
  const auto rep = assemble_report(root, out_dir.empty() ? root : fs::path(out_dir));
  out << "assembled " << rep.experiments << " experiments into " << rep.long_format.string() << " and "
      << rep.clusters.string() << "\n";
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated clustering and diversity analysis for molecular datasets", "fedmol"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a synthetic scaffold-blob dataset");
  SyntheticSpec spec;
  std::string gen_out, gen_name;
  gen->add_option("--scaffolds", spec.n_scaffolds, "Scaffold count")->capture_default_str();
  gen->add_option("--per-scaffold", spec.molecules_per_scaffold, "Molecules per scaffold")->capture_default_str();
  gen->add_option("--core-bits", spec.bits_per_scaffold_core, "Core bits per scaffold")->capture_default_str();
  gen->add_option("--noise-bits", spec.noise_bits, "Noise bits per molecule")->capture_default_str();
  gen->add_option("--bits", spec.fingerprint_bits, "Fingerprint length")->capture_default_str();
  gen->add_option("--seed", spec.seed, "Seed")->capture_default_str();
  gen->add_option("--name", gen_name, "Dataset name (default: output stem)");
  gen->add_option("-o,--output", gen_out, "Output TSV")->required();

  auto* part = app.add_subcommand("partition", "Split a dataset into client shards");
  PartitionConfig pc;
  std::string part_in, part_out = ".", part_name;
  part->add_option("--input,-i", part_in, "Dataset TSV")->required();
  part->add_option("--clients", pc.n_clients, "Number of clients")->capture_default_str();
  part->add_option("--primary-fraction", pc.primary_fraction, "Primary-client share")->capture_default_str();
  part->add_option("--alpha", pc.dirichlet_alpha, "Dirichlet concentration")->capture_default_str();
  part->add_option("--seed", pc.seed, "Seed")->capture_default_str();
  part->add_option("--out-dir", part_out, "Shard directory")->capture_default_str();
  part->add_option("--dataset", part_name, "Dataset name (default: input stem)");

  auto* run = app.add_subcommand("run", "Run one experiment and persist its reports");
  ExperimentOptions run_opts;
  std::string run_config;
  add_experiment_options(run, run_opts);
  run->add_option("--config", run_config, "Config file (key = value)");

  auto* grid_cmd = app.add_subcommand("grid", "Grid search with rank aggregation");
  std::string grid_config, grid_results;
  grid_cmd->add_option("--config", grid_config, "Config file with list-valued axes")->required();
  grid_cmd->add_option("--results-dir", grid_results, "Results root");

  auto* explain = app.add_subcommand("explain", "On-client explainability for one client");
  ExperimentOptions ex_opts;
  int ex_client = -1, ex_trees = 100;
  std::string ex_out;
  add_experiment_options(explain, ex_opts);
  explain->add_option("--client", ex_client, "Client id")->required();
  explain->add_option("--trees", ex_trees, "Random forest size")->capture_default_str();
  explain->add_option("--out-dir", ex_out, "Output directory");

  auto* proj = app.add_subcommand("project", "3-component federated PCA coordinates for one client");
  ExperimentOptions pr_opts;
  int pr_client = -1;
  std::string pr_out;
  add_experiment_options(proj, pr_opts);
  proj->add_option("--client", pr_client, "Client id")->required();
  proj->add_option("-o,--output", pr_out, "Output CSV (default: stdout)");

  auto* rep = app.add_subcommand("report", "Assemble long-format and per-cluster CSVs");
  std::string rep_root, rep_out;
  rep->add_option("--results-dir", rep_root, "Results root");
  rep->add_option("--out-dir", rep_out, "Output directory (default: results root)");

  std::vector<std::string> argv_store{"fedmol"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    const auto* target = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    out << target->help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& ch : msg)
      if (ch == '\n') ch = ' ';
    err << "error: usage: " << msg << "\n";
    const auto* target = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << target->help();
    return 2;
  }

  auto fail = [&](const std::string& code, std::string msg, int rc) {
    for (auto& ch : msg)
      if (ch == '\n') ch = ' ';
    if (msg.starts_with(code + ": ")) msg.erase(0, code.size() + 2);
    err << "error: " << code << ": " << msg << "\n";
    return rc;
  };
  try {
    if (gen->parsed()) return cmd_generate(spec, gen_out, gen_name, out);
    if (part->parsed()) return cmd_partition(part_in, pc, part_out, part_name, out);
    if (run->parsed()) return cmd_run(run_opts, run_config, out);
    if (grid_cmd->parsed()) return cmd_grid(grid_config, grid_results, out);
    if (explain->parsed()) return cmd_explain(ex_opts, ex_client, ex_out, ex_trees, out);
    if (proj->parsed()) return cmd_project(pr_opts, pr_client, pr_out, out);
    if (rep->parsed()) return cmd_report(rep_root, rep_out, out);
    return fail("usage", "no subcommand", 2);
  } catch (const CliError& e) {
    return fail(e.code, e.what(), e.code == "usage" ? 2 : e.code == "dataset" ? 4 : 3);
  } catch (const DatasetError& e) {
    return fail("dataset", e.what(), 4);
  } catch (const ProtocolError& e) {
    return fail("protocol", e.what(), 5);
  } catch (const std::invalid_argument& e) {
    return fail("config", e.what(), 3);
  } catch (const fs::filesystem_error& e) {
    return fail("io", e.what(), 6);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace fedmol
