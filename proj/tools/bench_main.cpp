// Command line front end: benchmark protocols, single consensus runs, density
// reports, agreement scores, graph cuts, and ensemble generation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eac/eac.hpp"

namespace {

// Accepts both plain names ("eac_km", "hier") and the compact hierarchical
// forms used in report columns ("hier-AL-raw", "hier-SL-enhanced").
void apply_algorithm(eac::ConsensusRequest& req, const std::string& name) {
  const auto dash = name.find('-');
  if (dash == std::string::npos) {
    req.algorithm = eac::parse_algorithm(name);
    return;
  }
  req.algorithm = eac::parse_algorithm(name.substr(0, dash));
  if (req.algorithm != eac::Algorithm::hier)
    throw std::invalid_argument("only hier takes -linkage-matrix suffixes: '" + name + "'");
  std::string rest = name.substr(dash + 1);
  const auto dash2 = rest.find('-');
  req.options.linkage =
      eac::parse_linkage(dash2 == std::string::npos ? rest : rest.substr(0, dash2));
  if (dash2 != std::string::npos)
    req.options.ca = eac::parse_ca_kind(rest.substr(dash2 + 1));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consensus clustering over ensembles of hard partitionings"};
  app.require_subcommand(1);

  auto* cmd_run = app.add_subcommand(
      "run",
      "run a benchmark protocol from a JSON config and write the report files "
      "(workers = 0 in the config defers to the EAC_WORKERS environment variable)");
  std::string run_config;
  std::size_t run_workers = 0;
  cmd_run->add_option("config", run_config, "protocol config JSON")->required();
  cmd_run->add_option("--workers", run_workers, "override the config worker count");

  auto* cmd_consensus =
      app.add_subcommand("consensus", "run one consensus algorithm on a saved ensemble");
  std::string co_dir, co_algo, co_out;
  std::uint32_t co_k = 2;
  std::uint64_t co_seed = 0;
  std::string co_linkage, co_matrix;
  double co_balance = 1.1, co_kl_eps = 1e-6, co_tol = 1e-6;
  std::uint32_t co_restarts = 5, co_max_iters = 100;
  std::size_t co_cap = eac::kDefaultOracleCap;
  cmd_consensus->add_option("ensemble", co_dir, "ensemble directory (manifest.json)")
      ->required();
  cmd_consensus
      ->add_option("--algo", co_algo,
                   "eac_km | h_km | sec | ecc | mcla | cspa | hier[-SL|AL|ML[-raw|enhanced]]")
      ->required();
  cmd_consensus->add_option("--k", co_k, "number of output clusters")->required();
  cmd_consensus->add_option("--seed", co_seed, "random seed");
  cmd_consensus->add_option("--out", co_out,
                            "write labels here plus a <out>.meta.json sidecar; "
                            "default prints labels to stdout");
  cmd_consensus->add_option("--linkage", co_linkage, "hier: SL | AL | ML");
  cmd_consensus->add_option("--matrix", co_matrix, "hier and cspa: raw | enhanced");
  cmd_consensus->add_option("--balance-factor", co_balance, "mcla and cspa cut balance");
  cmd_consensus->add_option("--kl-eps", co_kl_eps, "ecc smoothing epsilon");
  cmd_consensus->add_option("--restarts", co_restarts, "k-means restarts");
  cmd_consensus->add_option("--max-iters", co_max_iters, "k-means iteration cap");
  cmd_consensus->add_option("--tol", co_tol, "k-means convergence tolerance");
  cmd_consensus->add_option("--matrix-cap", co_cap,
                            "largest item count allowed to materialize a matrix");

  auto* cmd_density = app.add_subcommand(
      "density", "score a partitioning against an ensemble, CSV report to stdout");
  std::string de_dir, de_labels;
  cmd_density->add_option("ensemble", de_dir, "ensemble directory")->required();
  cmd_density->add_option("labels", de_labels, "label file, one integer per line")
      ->required();

  auto* cmd_nmi =
      app.add_subcommand("nmi", "agreement between two label files, 0..1 to stdout");
  std::string nmi_a, nmi_b;
  cmd_nmi->add_option("a", nmi_a, "label file")->required();
  cmd_nmi->add_option("b", nmi_b, "label file")->required();

  auto* cmd_graph = app.add_subcommand(
      "partition-graph", "balanced k-way cut of a weighted edge list; part ids to "
                         "stdout, cut and balance to stderr");
  std::string gr_path;
  std::uint32_t gr_k = 2;
  double gr_balance = 1.1;
  std::uint64_t gr_seed = 0;
  cmd_graph
      ->add_option("edgelist", gr_path,
                   "text file: 'vertices edges' header, then 'u v weight' lines")
      ->required();
  cmd_graph->add_option("--k", gr_k, "number of parts")->required();
  cmd_graph->add_option("--balance-factor", gr_balance, "max part size over ideal");
  cmd_graph->add_option("--seed", gr_seed, "random seed");

  auto* cmd_make = app.add_subcommand(
      "make-ensemble", "generate base clusterings from a CSV dataset");
  std::string mk_csv, mk_out, mk_label;
  std::vector<std::string> mk_discard;
  std::size_t mk_p = 20;
  std::uint64_t mk_seed = 0;
  std::uint32_t mk_k0 = 2;
  cmd_make->add_option("csv", mk_csv, "dataset CSV with a header row")->required();
  cmd_make->add_option("--out", mk_out, "ensemble output directory")->required();
  cmd_make->add_option("--p", mk_p, "ensemble size");
  cmd_make->add_option("--seed", mk_seed, "random seed");
  cmd_make->add_option("--label-column", mk_label, "column holding class labels");
  cmd_make->add_option("--discard", mk_discard, "columns to drop (ids etc.)");
  cmd_make->add_option("--k0", mk_k0, "lower bound on base k without a label column");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_run) {
      eac::ProtocolConfig cfg = eac::load_protocol_config(run_config);
      if (run_workers > 0) cfg.workers = run_workers;
      const eac::ProtocolResult res = eac::run_protocol(cfg, &std::cerr);
      eac::emit_report(cfg, res.records, cfg.output_dir);
      std::cerr << "report written to " << cfg.output_dir.string() << "\n";
      return res.any_failed ? 2 : 0;
    }

    if (*cmd_consensus) {
      eac::ConsensusRequest req;
      apply_algorithm(req, co_algo);
      if (!co_linkage.empty()) req.options.linkage = eac::parse_linkage(co_linkage);
      if (!co_matrix.empty()) req.options.ca = eac::parse_ca_kind(co_matrix);
      req.k_out = co_k;
      req.seed = co_seed;
      req.options.balance_factor = co_balance;
      req.options.kl_eps = co_kl_eps;
      req.options.matrix_cap = co_cap;
      req.options.kmeans.restarts = co_restarts;
      req.options.kmeans.max_iters = co_max_iters;
      req.options.kmeans.tol = co_tol;
      const eac::ClusterEnsemble ens = eac::load_ensemble(co_dir);
      const eac::FitResult fit = eac::run_consensus(ens, req);
      if (co_out.empty()) {
        for (eac::Label l : fit.partitioning.labels()) std::cout << l << '\n';
      } else {
        eac::save_labels(co_out, fit.partitioning);
        nlohmann::json meta;
        meta["algorithm"] = eac::algorithm_label(req);
        meta["k_out"] = req.k_out;
        meta["clusters"] = fit.partitioning.cluster_count();
        meta["loss"] = fit.loss;
        meta["iterations"] = fit.iterations;
        meta["converged"] = fit.converged;
        meta["seed"] = req.seed;
        std::ofstream side(co_out + ".meta.json");
        if (!side) throw std::runtime_error("cannot write " + co_out + ".meta.json");
        side << meta.dump(2) << '\n';
      }
      std::cerr << eac::algorithm_label(req) << ": "
                << fit.partitioning.cluster_count() << " clusters, loss " << fit.loss
                << ", " << fit.iterations << " iterations\n";
      return 0;
    }

    if (*cmd_density) {
      const eac::ClusterEnsemble ens = eac::load_ensemble(de_dir);
      const eac::Partitioning pi = eac::load_labels(de_labels);
      if (pi.size() != ens.items())
        throw std::runtime_error("label count " + std::to_string(pi.size()) +
                                 " does not match ensemble items " +
                                 std::to_string(ens.items()));
      const eac::DensityReport report =
          eac::partition_score(eac::build_incidence(ens), pi);
      eac::write_density_report_csv(std::cout, report);
      return 0;
    }

    if (*cmd_nmi) {
      const eac::Partitioning a = eac::load_labels(nmi_a);
      const eac::Partitioning b = eac::load_labels(nmi_b);
      if (a.size() != b.size())
        throw std::runtime_error("label files disagree on item count");
      std::printf("%.17g\n", eac::nmi(a, b));
      return 0;
    }

    if (*cmd_graph) {
      std::ifstream in(gr_path);
      if (!in) throw std::runtime_error("cannot read " + gr_path);
      const eac::WeightedGraph g = eac::WeightedGraph::parse_edge_list(in);
      const eac::PartitionResult res =
          eac::partition_graph(g, gr_k, gr_balance, gr_seed);
      for (std::uint32_t part : res.part) std::cout << part << '\n';
      std::cerr << "cut " << res.edge_cut << " balance " << res.balance << "\n";
      return 0;
    }

    if (*cmd_make) {
      eac::DatasetSpec spec;
      spec.name = std::filesystem::path(mk_csv).stem().string();
      spec.path = mk_csv;
      if (!mk_label.empty()) spec.label_column = mk_label;
      spec.discard_columns = mk_discard;
      spec.k0 = mk_k0;
      const eac::Dataset ds = eac::load_dataset(spec, &std::cerr);
      const eac::ClusterEnsemble ens = eac::generate_base_clusterings(ds, mk_p, mk_seed);
      eac::save_ensemble(mk_out, ens);
      std::cerr << "wrote " << ens.size() << " base clusterings for " << ens.items()
                << " items to " << mk_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
