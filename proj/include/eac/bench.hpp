#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "eac/consensus.hpp"
#include "eac/core.hpp"
#include "eac/io.hpp"
#include "eac/kmeans.hpp"
#include "eac/metrics.hpp"
#include "eac/rng.hpp"

namespace eac {

struct DatasetSpec {
  std::string name;
  std::filesystem::path path;  // CSV: comma separated, header row, '.' decimals
  std::optional<std::string> label_column;
  std::vector<std::string> discard_columns;
  std::uint32_t k0 = 2;  // lower bound on base k when no label column exists
};

struct AlgorithmSpec {
  ConsensusRequest request;  // k_out and seed are overridden per run
  std::string label;
};

struct ProtocolConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<AlgorithmSpec> algorithms;
  std::size_t repetitions = 20;
  std::size_t ensemble_size = 20;
  std::uint32_t k_out = 20;
  std::uint64_t master_seed = 1;
  std::size_t matrix_cap = kDefaultOracleCap;
  std::size_t workers = 0;  // 0: EAC_WORKERS env var, else 1
  std::filesystem::path output_dir = "bench-out";
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace detail

// Loads a CSV dataset: drops configured columns, takes the label column as
// ground truth (k0 = number of distinct labels), parses everything else as
// doubles, and z-normalizes each feature with the population stddev.
// Constant columns cannot be normalized and are dropped with a warning.
inline Dataset load_dataset(const DatasetSpec& spec, std::ostream* warnings = nullptr) {
  std::ifstream in(spec.path);
  if (!in) throw std::runtime_error("cannot read " + spec.path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(spec.path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header_cells = detail::split_csv_line(line);
  std::vector<std::string> names(header_cells.size());
  for (std::size_t c = 0; c < header_cells.size(); ++c)
    names[c] = detail::trim(header_cells[c]);

  std::vector<bool> drop(names.size(), false);
  for (const auto& dc : spec.discard_columns) {
    bool found = false;
    for (std::size_t c = 0; c < names.size(); ++c)
      if (names[c] == dc) {
        drop[c] = true;
        found = true;
      }
    if (!found)
      throw std::runtime_error(spec.path.string() + ": discard column '" + dc +
                               "' not in header");
  }
  std::size_t label_col = names.size();
  if (spec.label_column) {
    for (std::size_t c = 0; c < names.size(); ++c)
      if (names[c] == *spec.label_column) label_col = c;
    if (label_col == names.size())
      throw std::runtime_error(spec.path.string() + ": label column '" +
                               *spec.label_column + "' not in header");
    drop[label_col] = true;
  }

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < names.size(); ++c)
    if (!drop[c]) feature_cols.push_back(c);
  if (feature_cols.empty())
    throw std::runtime_error(spec.path.string() + ": no feature columns left");

  Dataset ds;
  ds.name = spec.name;
  std::vector<std::string> raw_labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != names.size())
      throw std::runtime_error(spec.path.string() + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(names.size()) +
                               " cells, got " + std::to_string(cells.size()));
    for (std::size_t c : feature_cols) {
      const std::string cell = detail::trim(cells[c]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw std::runtime_error(spec.path.string() + ":" + std::to_string(lineno) +
                                 ": column '" + names[c] + "': not a number: '" +
                                 cell + "'");
      ds.features.push_back(v);
    }
    if (label_col < names.size()) raw_labels.push_back(detail::trim(cells[label_col]));
    ++ds.n;
  }
  if (ds.n < 2) throw std::runtime_error(spec.path.string() + ": fewer than 2 rows");
  ds.f = feature_cols.size();
  for (std::size_t c : feature_cols) ds.feature_names.push_back(names[c]);

  if (label_col < names.size()) {
    std::unordered_map<std::string, Label> remap;
    std::vector<Label> gt(ds.n);
    Label next = 0;
    for (std::size_t i = 0; i < ds.n; ++i) {
      auto [it, fresh] = remap.emplace(raw_labels[i], next);
      if (fresh) ++next;
      gt[i] = it->second;
    }
    ds.ground_truth = std::move(gt);
    ds.k0 = next;
  } else {
    ds.k0 = spec.k0;
  }

  // z-normalize, dropping constants.
  std::vector<double> mean(ds.f, 0.0), sd(ds.f, 0.0);
  for (std::size_t i = 0; i < ds.n; ++i)
    for (std::size_t c = 0; c < ds.f; ++c) mean[c] += ds.features[i * ds.f + c];
  for (std::size_t c = 0; c < ds.f; ++c) mean[c] /= static_cast<double>(ds.n);
  for (std::size_t i = 0; i < ds.n; ++i)
    for (std::size_t c = 0; c < ds.f; ++c) {
      const double d = ds.features[i * ds.f + c] - mean[c];
      sd[c] += d * d;
    }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < ds.f; ++c) {
    sd[c] = std::sqrt(sd[c] / static_cast<double>(ds.n));
    if (sd[c] > 1e-12) {
      keep.push_back(c);
    } else if (warnings) {
      *warnings << spec.path.string() << ": column '" << ds.feature_names[c]
                << "' is constant; dropped\n";
    }
  }
  if (keep.empty())
    throw std::runtime_error(spec.path.string() + ": all feature columns constant");
  std::vector<double> norm;
  norm.reserve(ds.n * keep.size());
  for (std::size_t i = 0; i < ds.n; ++i)
    for (std::size_t c : keep)
      norm.push_back((ds.features[i * ds.f + c] - mean[c]) / sd[c]);
  std::vector<std::string> kept_names;
  for (std::size_t c : keep) kept_names.push_back(ds.feature_names[c]);
  ds.features = std::move(norm);
  ds.feature_names = std::move(kept_names);
  ds.f = keep.size();
  ds.validate();
  return ds;
}

struct RunRecord {
  std::string dataset;
  std::size_t repetition = 0;
  std::string algorithm;
  std::string status;  // ok | failed | skipped
  double ensemble_nmi = 0.0;
  double density = 0.0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;  // reported in timings.csv, not records.csv
  std::string error;
};

struct ProtocolResult {
  std::vector<RunRecord> records;
  bool any_failed = false;
};

// JSON protocol config. Dataset paths are resolved relative to the config
// file's directory.
inline ProtocolConfig load_protocol_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  ProtocolConfig cfg;
  const std::filesystem::path base = path.parent_path();
  cfg.repetitions = j.value("repetitions", cfg.repetitions);
  cfg.ensemble_size = j.value("ensemble_size", cfg.ensemble_size);
  cfg.k_out = j.value("k_out", cfg.k_out);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  cfg.matrix_cap = j.value("matrix_cap", cfg.matrix_cap);
  cfg.workers = j.value("workers", cfg.workers);
  if (j.contains("output_dir"))
    cfg.output_dir = base / j["output_dir"].get<std::string>();
  if (cfg.repetitions < 1) throw std::runtime_error("config: repetitions must be >= 1");
  if (cfg.ensemble_size < 2)
    throw std::runtime_error("config: ensemble_size must be >= 2");
  for (const auto& dj : j.at("datasets")) {
    DatasetSpec ds;
    ds.name = dj.at("name").get<std::string>();
    ds.path = base / dj.at("path").get<std::string>();
    if (dj.contains("label_column"))
      ds.label_column = dj["label_column"].get<std::string>();
    if (dj.contains("discard_columns"))
      for (const auto& c : dj["discard_columns"])
        ds.discard_columns.push_back(c.get<std::string>());
    ds.k0 = dj.value("k0", ds.k0);
    cfg.datasets.push_back(std::move(ds));
  }
  for (const auto& aj : j.at("algorithms")) {
    AlgorithmSpec spec;
    spec.request.algorithm = parse_algorithm(aj.at("algorithm").get<std::string>());
    auto& opt = spec.request.options;
    if (aj.contains("linkage")) opt.linkage = parse_linkage(aj["linkage"]);
    if (aj.contains("matrix")) opt.ca = parse_ca_kind(aj["matrix"]);
    opt.kl_eps = aj.value("kl_eps", opt.kl_eps);
    opt.balance_factor = aj.value("balance_factor", opt.balance_factor);
    opt.kmeans.restarts = aj.value("restarts", opt.kmeans.restarts);
    opt.kmeans.max_iters = aj.value("max_iters", opt.kmeans.max_iters);
    opt.kmeans.tol = aj.value("tol", opt.kmeans.tol);
    spec.label = aj.value("label", algorithm_label(spec.request));
    cfg.algorithms.push_back(std::move(spec));
  }
  if (cfg.datasets.empty()) throw std::runtime_error("config: no datasets");
  if (cfg.algorithms.empty()) throw std::runtime_error("config: no algorithms");
  std::set<std::string> seen;
  for (const auto& a : cfg.algorithms)
    if (!seen.insert(a.label).second)
      throw std::runtime_error("config: duplicate algorithm label '" + a.label + "'");
  return cfg;
}

inline constexpr const char* kBaselineMean = "ensemble-mean";
inline constexpr const char* kBaselineBest = "ensemble-best";

namespace detail {

inline std::size_t resolve_workers(const ProtocolConfig& cfg) {
  if (cfg.workers > 0) return cfg.workers;
  if (const char* env = std::getenv("EAC_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

inline bool needs_matrix(Algorithm a) {
  return a == Algorithm::hier || a == Algorithm::cspa;
}

// All records of one (dataset, repetition) cell, in canonical order:
// the two ensemble baselines, then the configured algorithms.
inline std::vector<RunRecord> run_cell(const ProtocolConfig& cfg, const Dataset& ds,
                                       std::size_t rep) {
  const std::uint64_t cell_seed =
      seed_mix(seed_mix(cfg.master_seed, hash_name(ds.name)), rep);
  std::vector<RunRecord> out;
  auto base = [&](const char* algo) {
    RunRecord r;
    r.dataset = ds.name;
    r.repetition = rep;
    r.algorithm = algo;
    r.seed = cell_seed;
    return r;
  };
  ClusterEnsemble ensemble = generate_base_clusterings(ds, cfg.ensemble_size, cell_seed);
  ConsensusRunner runner(ensemble);
  const IncidenceMatrix& h = runner.incidence();
  {
    const BaselineStats bn = nmi_baselines(ensemble);
    const BaselineStats bd = density_baselines(h, ensemble);
    RunRecord mean = base(kBaselineMean);
    mean.status = "ok";
    mean.ensemble_nmi = bn.mean;
    mean.density = bd.mean;
    out.push_back(std::move(mean));
    RunRecord best = base(kBaselineBest);
    best.status = "ok";
    best.ensemble_nmi = bn.best;
    best.density = bd.best;
    out.push_back(std::move(best));
  }
  for (const auto& spec : cfg.algorithms) {
    RunRecord r = base(spec.label.c_str());
    ConsensusRequest req = spec.request;
    req.k_out = cfg.k_out;
    req.seed = seed_mix(cell_seed, hash_name(spec.label));
    req.options.matrix_cap = cfg.matrix_cap;
    r.seed = req.seed;
    if (detail::needs_matrix(req.algorithm) && ds.n > cfg.matrix_cap) {
      r.status = "skipped";
      r.error = "item count exceeds matrix cap";
      out.push_back(std::move(r));
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const FitResult fit = runner.run(req);
      r.ensemble_nmi = ensemble_nmi(fit.partitioning, ensemble);
      r.density = partition_score(h, fit.partitioning).score;
      r.status = "ok";
    } catch (const std::exception& e) {
      r.status = "failed";
      r.error = e.what();
    }
    const auto t1 = std::chrono::steady_clock::now();
    r.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace detail

// Repeated-consensus protocol: per dataset and repetition, generate a fresh
// base ensemble from a derived seed, score the ensemble baselines, then run
// every configured algorithm at the configured k_out. Repetitions of one
// dataset run on the worker pool; records come back in canonical order
// regardless of worker count.
inline ProtocolResult run_protocol(const ProtocolConfig& cfg,
                                   std::ostream* log = nullptr) {
  ProtocolResult result;
  const std::size_t workers = detail::resolve_workers(cfg);
  std::mutex log_mutex;
  for (const auto& spec : cfg.datasets) {
    Dataset ds;
    try {
      std::ostringstream warn;
      ds = load_dataset(spec, &warn);
      if (log && !warn.str().empty()) *log << warn.str();
    } catch (const std::exception& e) {
      // The whole grid for this dataset fails with the load error.
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        auto fail = [&](const std::string& algo) {
          RunRecord r;
          r.dataset = spec.name;
          r.repetition = rep;
          r.algorithm = algo;
          r.status = "failed";
          r.error = e.what();
          result.records.push_back(std::move(r));
        };
        fail(kBaselineMean);
        fail(kBaselineBest);
        for (const auto& a : cfg.algorithms) fail(a.label);
      }
      result.any_failed = true;
      if (log) *log << spec.name << ": load failed: " << e.what() << "\n";
      continue;
    }
    std::vector<std::vector<RunRecord>> cells(cfg.repetitions);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t rep = next.fetch_add(1);
        if (rep >= cfg.repetitions) return;
        cells[rep] = detail::run_cell(cfg, ds, rep);
        if (log) {
          std::lock_guard<std::mutex> lock(log_mutex);
          *log << ds.name << ": repetition " << rep + 1 << "/" << cfg.repetitions
               << " done\n";
        }
      }
    };
    if (workers <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < std::min(workers, cfg.repetitions); ++w)
        pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    for (auto& cell : cells)
      for (auto& r : cell) {
        if (r.status == "failed") result.any_failed = true;
        result.records.push_back(std::move(r));
      }
  }
  return result;
}

namespace detail {

inline std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

struct TableCell {
  bool present = false;
  double value = 0.0;
};

// Mean metric per (dataset, algorithm) over records with status ok.
inline std::vector<std::vector<TableCell>> summarize(
    const ProtocolConfig& cfg, const std::vector<RunRecord>& records,
    const std::vector<std::string>& columns, double RunRecord::*metric) {
  std::unordered_map<std::string, std::size_t> row_of, col_of;
  for (std::size_t r = 0; r < cfg.datasets.size(); ++r)
    row_of[cfg.datasets[r].name] = r;
  for (std::size_t c = 0; c < columns.size(); ++c) col_of[columns[c]] = c;
  std::vector<std::vector<double>> sums(cfg.datasets.size(),
                                        std::vector<double>(columns.size(), 0.0));
  std::vector<std::vector<std::size_t>> counts(
      cfg.datasets.size(), std::vector<std::size_t>(columns.size(), 0));
  for (const auto& rec : records) {
    if (rec.status != "ok") continue;
    const auto ri = row_of.find(rec.dataset);
    const auto ci = col_of.find(rec.algorithm);
    if (ri == row_of.end() || ci == col_of.end()) continue;
    sums[ri->second][ci->second] += rec.*metric;
    ++counts[ri->second][ci->second];
  }
  std::vector<std::vector<TableCell>> table(
      cfg.datasets.size(), std::vector<TableCell>(columns.size()));
  for (std::size_t r = 0; r < cfg.datasets.size(); ++r)
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (counts[r][c] > 0)
        table[r][c] = TableCell{true, sums[r][c] / static_cast<double>(counts[r][c])};
  return table;
}

inline void write_table(const ProtocolConfig& cfg,
                        const std::vector<std::string>& columns,
                        const std::vector<std::vector<TableCell>>& table,
                        std::size_t first_algo_col, const std::filesystem::path& dir,
                        const std::string& stem) {
  // Best value per row among algorithm columns (baselines excluded).
  std::vector<std::size_t> best(table.size(), columns.size());
  for (std::size_t r = 0; r < table.size(); ++r)
    for (std::size_t c = first_algo_col; c < columns.size(); ++c)
      if (table[r][c].present &&
          (best[r] == columns.size() || table[r][c].value > table[r][best[r]].value))
        best[r] = c;

  std::ofstream csv(dir / (stem + ".csv"));
  if (!csv) throw std::runtime_error("cannot write " + (dir / (stem + ".csv")).string());
  csv << "dataset";
  for (const auto& c : columns) csv << ',' << c;
  csv << ",best\n";
  for (std::size_t r = 0; r < table.size(); ++r) {
    csv << cfg.datasets[r].name;
    for (std::size_t c = 0; c < columns.size(); ++c)
      csv << ',' << (table[r][c].present ? fmt_percent(table[r][c].value) : "NA");
    csv << ',' << (best[r] < columns.size() ? columns[best[r]] : "NA") << '\n';
  }

  std::ofstream md(dir / (stem + ".md"));
  if (!md) throw std::runtime_error("cannot write " + (dir / (stem + ".md")).string());
  md << "| dataset |";
  for (const auto& c : columns) md << ' ' << c << " |";
  md << "\n|---|";
  for (std::size_t c = 0; c < columns.size(); ++c) md << "---|";
  md << '\n';
  for (std::size_t r = 0; r < table.size(); ++r) {
    md << "| " << cfg.datasets[r].name << " |";
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (!table[r][c].present) {
        md << " NA |";
      } else if (c == best[r]) {
        md << " **" << fmt_percent(table[r][c].value) << "** |";
      } else {
        md << ' ' << fmt_percent(table[r][c].value) << " |";
      }
    }
    md << '\n';
  }
}

}  // namespace detail

// Writes records.csv (deterministic), timings.csv (wall clock), and the two
// summary tables in CSV and markdown.
inline void emit_report(const ProtocolConfig& cfg,
                        const std::vector<RunRecord>& records,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "records.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "records.csv").string());
    out << "dataset,repetition,algorithm,status,ensemble_nmi,density,seed\n";
    for (const auto& r : records) {
      out << r.dataset << ',' << r.repetition << ',' << r.algorithm << ','
          << r.status << ',';
      if (r.status == "ok")
        out << detail::fmt_full(r.ensemble_nmi) << ',' << detail::fmt_full(r.density);
      else
        out << ',';
      out << ',' << r.seed << '\n';
    }
  }
  {
    std::ofstream out(dir / "timings.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "timings.csv").string());
    out << "dataset,repetition,algorithm,wall_ms\n";
    for (const auto& r : records) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", r.wall_ms);
      out << r.dataset << ',' << r.repetition << ',' << r.algorithm << ',' << buf
          << '\n';
    }
  }
  std::vector<std::string> columns{kBaselineMean, kBaselineBest};
  for (const auto& a : cfg.algorithms) columns.push_back(a.label);
  const auto nmi_table =
      detail::summarize(cfg, records, columns, &RunRecord::ensemble_nmi);
  detail::write_table(cfg, columns, nmi_table, 2, dir, "nmi_table");
  const auto density_table =
      detail::summarize(cfg, records, columns, &RunRecord::density);
  detail::write_table(cfg, columns, density_table, 2, dir, "density_table");
}

}  // namespace eac
