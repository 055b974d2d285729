#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "eac/core.hpp"
#include "eac/density.hpp"

namespace eac {

// Exact joint counts of two partitionings over the same items.
struct ContingencyTable {
  std::size_t rows = 0, cols = 0, n = 0;
  std::vector<std::uint64_t> cell;      // rows * cols
  std::vector<std::uint64_t> row_sum;   // rows
  std::vector<std::uint64_t> col_sum;   // cols

  std::uint64_t at(std::size_t r, std::size_t c) const { return cell[r * cols + c]; }
};

inline ContingencyTable contingency(const Partitioning& a, const Partitioning& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("contingency: item count mismatch");
  ContingencyTable t;
  t.rows = a.cluster_count();
  t.cols = b.cluster_count();
  t.n = a.size();
  t.cell.assign(t.rows * t.cols, 0);
  t.row_sum.assign(t.rows, 0);
  t.col_sum.assign(t.cols, 0);
  for (std::size_t i = 0; i < t.n; ++i) {
    ++t.cell[a.label(i) * t.cols + b.label(i)];
    ++t.row_sum[a.label(i)];
    ++t.col_sum[b.label(i)];
  }
  return t;
}

// Normalized mutual information, 2I / (H(a) + H(b)) with base-2 logs.
// Degenerate cases: both sides a single cluster compare equal (1.0); exactly
// one side with zero entropy shares no information with the other (0.0).
inline double nmi(const Partitioning& a, const Partitioning& b) {
  const ContingencyTable t = contingency(a, b);
  const double n = static_cast<double>(t.n);
  auto entropy = [n](const std::vector<std::uint64_t>& sums) {
    double h = 0.0;
    for (std::uint64_t s : sums) {
      if (s == 0) continue;
      const double q = static_cast<double>(s) / n;
      h -= q * std::log2(q);
    }
    return h;
  };
  const double ha = entropy(t.row_sum);
  const double hb = entropy(t.col_sum);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  if (ha == 0.0 || hb == 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t r = 0; r < t.rows; ++r)
    for (std::size_t c = 0; c < t.cols; ++c) {
      const std::uint64_t v = t.at(r, c);
      if (v == 0) continue;
      const double q = static_cast<double>(v) / n;
      mi += q * std::log2(q * n * n /
                          (static_cast<double>(t.row_sum[r]) *
                           static_cast<double>(t.col_sum[c])));
    }
  double value = 2.0 * mi / (ha + hb);
  // Rounding can push the result a hair outside [0, 1]; anything further out
  // would be a real defect, so only shave true noise.
  if (value < 0.0) {
    if (value < -1e-9) throw std::logic_error("nmi: negative beyond tolerance");
    value = 0.0;
  }
  if (value > 1.0) {
    if (value > 1.0 + 1e-9) throw std::logic_error("nmi: above 1 beyond tolerance");
    value = 1.0;
  }
  return value;
}

// Mean agreement of a candidate with every ensemble member.
inline double ensemble_nmi(const Partitioning& pi, const ClusterEnsemble& ensemble) {
  if (pi.size() != ensemble.items())
    throw std::invalid_argument("ensemble_nmi: item count mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < ensemble.size(); ++j)
    acc += nmi(pi, ensemble.partitioning(j));
  return acc / static_cast<double>(ensemble.size());
}

struct BaselineStats {
  double mean = 0.0;
  double best = 0.0;
  std::size_t best_index = 0;
};

// Agreement baselines over the ensemble itself: mean pairwise NMI, and the
// best single member (the one with the highest mean NMI to the others).
inline BaselineStats nmi_baselines(const ClusterEnsemble& ensemble) {
  const std::size_t p = ensemble.size();
  if (p < 2) throw std::invalid_argument("nmi_baselines: need at least 2 members");
  std::vector<double> pair(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) {
      const double v = nmi(ensemble.partitioning(i), ensemble.partitioning(j));
      pair[i * p + j] = pair[j * p + i] = v;
    }
  BaselineStats st;
  double total = 0.0;
  st.best = -1.0;
  for (std::size_t i = 0; i < p; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < p; ++j)
      if (j != i) row += pair[i * p + j];
    total += row;
    const double mean_i = row / static_cast<double>(p - 1);
    if (mean_i > st.best) {
      st.best = mean_i;
      st.best_index = i;
    }
  }
  st.mean = total / static_cast<double>(p * (p - 1));
  return st;
}

// Density baselines: score of each ensemble member against the full ensemble.
inline BaselineStats density_baselines(const IncidenceMatrix& h,
                                       const ClusterEnsemble& ensemble) {
  const std::size_t p = ensemble.size();
  if (p < 1) throw std::invalid_argument("density_baselines: empty ensemble");
  BaselineStats st;
  st.best = -1.0;
  double total = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    const double s = partition_score(h, ensemble.partitioning(j)).score;
    total += s;
    if (s > st.best) {
      st.best = s;
      st.best_index = j;
    }
  }
  st.mean = total / static_cast<double>(p);
  return st;
}

}  // namespace eac
