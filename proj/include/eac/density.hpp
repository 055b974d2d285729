#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eac/core.hpp"

namespace eac {

inline constexpr std::size_t kDefaultOracleCap = 5000;

// Compensated accumulator for the quadratic-cost reference sums, which add
// O(n^2) small terms.
struct KahanSum {
  double sum = 0.0, carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

// Dense symmetric co-association matrix: entry (i, j) is the fraction of
// ensemble members that put i and j into the same cluster. Diagonal is 1.
class CoAssocMatrix {
 public:
  CoAssocMatrix(std::size_t n, std::size_t p)
      : n_(n), p_(p), a_(n * n, 0.0) {}

  std::size_t items() const { return n_; }
  std::size_t partitionings() const { return p_; }
  double at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  double& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  const std::vector<double>& values() const { return a_; }

 private:
  std::size_t n_, p_;
  std::vector<double> a_;
};

// Materializes the co-association matrix from H. Quadratic in n; refuses to
// run past `cap` items so the quadratic path cannot be invoked by accident on
// inputs where only the linear path is sensible.
inline CoAssocMatrix coassociation(const IncidenceMatrix& h,
                                   std::size_t cap = kDefaultOracleCap) {
  const std::size_t n = h.items();
  if (n > cap)
    throw std::invalid_argument("coassociation: " + std::to_string(n) +
                                " items exceeds cap " + std::to_string(cap));
  CoAssocMatrix a(n, h.partitionings());
  for (std::size_t f = 0; f < h.columns(); ++f) {
    const auto items = h.column_items(f);
    for (std::size_t x = 0; x < items.size(); ++x)
      for (std::size_t y = x + 1; y < items.size(); ++y) {
        a.at(items[x], items[y]) += 1.0;
        a.at(items[y], items[x]) += 1.0;
      }
  }
  const double inv_p = 1.0 / static_cast<double>(h.partitionings());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a.at(i, j) = (i == j) ? 1.0 : a.at(i, j) * inv_p;
  return a;
}

// Per-column membership counts of one cluster: alpha[f] = how many cluster
// members fall into ensemble cluster f. sq_sum carries sum(alpha^2) exactly.
struct AlphaCounts {
  std::vector<std::uint32_t> alpha;
  std::uint64_t sq_sum = 0;
  std::size_t size = 0;
};

inline AlphaCounts alpha_counts(const IncidenceMatrix& h,
                                std::span<const std::uint32_t> members) {
  AlphaCounts ac;
  ac.alpha.assign(h.columns(), 0);
  ac.size = members.size();
  for (std::uint32_t i : members)
    for (std::uint32_t f : h.row_columns(i)) ++ac.alpha[f];
  for (std::uint32_t f = 0; f < ac.alpha.size(); ++f)
    ac.sq_sum += static_cast<std::uint64_t>(ac.alpha[f]) * ac.alpha[f];
  return ac;
}

// Intra-cluster association weight, reference form: sum of A(i, j) over
// ordered pairs of distinct members. Quadratic in the cluster size.
inline double cluster_weight_oracle(const CoAssocMatrix& a,
                                    std::span<const std::uint32_t> members) {
  KahanSum s;
  for (std::size_t x = 0; x < members.size(); ++x)
    for (std::size_t y = x + 1; y < members.size(); ++y)
      s.add(a.at(members[x], members[y]));
  return 2.0 * s.value();
}

// Same weight from column counts alone: pairs sharing a column, summed over
// columns, give sum(alpha^2) - |C| co-association counts; dividing by p
// yields the weight without touching the matrix. Linear in p * |C|.
inline double cluster_weight_fast(const IncidenceMatrix& h,
                                  std::span<const std::uint32_t> members) {
  const AlphaCounts ac = alpha_counts(h, members);
  const double p = static_cast<double>(h.partitionings());
  return static_cast<double>(ac.sq_sum) / p - static_cast<double>(members.size());
}

// Mean pairwise association inside a cluster; singletons score 0.
inline double cluster_density(double weight, std::size_t size) {
  if (size < 2) return 0.0;
  return weight / (static_cast<double>(size) * static_cast<double>(size - 1));
}

// Mean association between two disjoint clusters, reference form.
inline double inter_weight_oracle(const CoAssocMatrix& a,
                                  std::span<const std::uint32_t> left,
                                  std::span<const std::uint32_t> right) {
  KahanSum s;
  for (std::uint32_t i : left)
    for (std::uint32_t j : right) s.add(a.at(i, j));
  return s.value();
}

inline double inter_density_oracle(const CoAssocMatrix& a,
                                   std::span<const std::uint32_t> left,
                                   std::span<const std::uint32_t> right) {
  if (left.empty() || right.empty())
    throw std::invalid_argument("inter_density: empty cluster");
  return inter_weight_oracle(a, left, right) /
         (static_cast<double>(left.size()) * static_cast<double>(right.size()));
}

struct ClusterDensity {
  std::uint32_t cluster = 0;
  std::size_t size = 0;
  double weight = 0.0;
  double density = 0.0;
};

// Per-cluster weights and densities of a partitioning plus the overall score
// S = (1/n) * sum(|C| * D(C)), which lives in [0, 1].
struct DensityReport {
  std::vector<ClusterDensity> per_cluster;
  double score = 0.0;
};

inline DensityReport partition_score(const IncidenceMatrix& h, const Partitioning& pi) {
  if (pi.size() != h.items())
    throw std::invalid_argument("partition_score: item count mismatch");
  const std::size_t n = h.items();
  const double p = static_cast<double>(h.partitionings());
  const std::uint32_t k = pi.cluster_count();

  // One shared count buffer, cleared via the touched-column list, keeps the
  // whole scan O(n * p + k) regardless of how clusters are shaped.
  std::vector<std::uint32_t> count(h.columns(), 0);
  std::vector<std::uint32_t> touched;
  const auto members = pi.members();

  DensityReport report;
  report.per_cluster.reserve(k);
  double acc = 0.0;
  for (std::uint32_t c = 0; c < k; ++c) {
    touched.clear();
    for (std::uint32_t i : members[c])
      for (std::uint32_t f : h.row_columns(i)) {
        if (count[f]++ == 0) touched.push_back(f);
      }
    std::uint64_t sq = 0;
    for (std::uint32_t f : touched) {
      sq += static_cast<std::uint64_t>(count[f]) * count[f];
      count[f] = 0;
    }
    ClusterDensity cd;
    cd.cluster = c;
    cd.size = members[c].size();
    cd.weight = static_cast<double>(sq) / p - static_cast<double>(cd.size);
    cd.density = cluster_density(cd.weight, cd.size);
    acc += static_cast<double>(cd.size) * cd.density;
    report.per_cluster.push_back(cd);
  }
  report.score = acc / static_cast<double>(n);
  return report;
}

// Reference scorer that accumulates pairwise associations directly from the
// rows, never materializing the matrix. Quadratic in cluster sizes; exists to
// cross-check the linear path at sizes where the dense matrix will not fit.
inline DensityReport partition_score_quadratic(const IncidenceMatrix& h,
                                               const Partitioning& pi) {
  if (pi.size() != h.items())
    throw std::invalid_argument("partition_score: item count mismatch");
  const double p = static_cast<double>(h.partitionings());
  const auto members = pi.members();
  DensityReport report;
  double acc = 0.0;
  for (std::uint32_t c = 0; c < pi.cluster_count(); ++c) {
    const auto& m = members[c];
    KahanSum w;
    for (std::size_t x = 0; x < m.size(); ++x) {
      const auto rx = h.row_columns(m[x]);
      for (std::size_t y = x + 1; y < m.size(); ++y) {
        const auto ry = h.row_columns(m[y]);
        std::uint32_t shared = 0;
        for (std::size_t j = 0; j < rx.size(); ++j) shared += rx[j] == ry[j];
        w.add(static_cast<double>(shared) / p);
      }
    }
    ClusterDensity cd;
    cd.cluster = c;
    cd.size = m.size();
    cd.weight = 2.0 * w.value();
    cd.density = cluster_density(cd.weight, cd.size);
    acc += static_cast<double>(cd.size) * cd.density;
    report.per_cluster.push_back(cd);
  }
  report.score = acc / static_cast<double>(h.items());
  return report;
}

// Score change from replacing `parent` with disjoint halves `left` and
// `right`. Only the three clusters involved are touched, so candidate splits
// can be ranked without rescoring the rest of the partitioning.
inline double split_delta(const IncidenceMatrix& h,
                          std::span<const std::uint32_t> parent,
                          std::span<const std::uint32_t> left,
                          std::span<const std::uint32_t> right) {
  if (left.empty() || right.empty())
    throw std::invalid_argument("split_delta: empty side");
  if (left.size() + right.size() != parent.size())
    throw std::invalid_argument("split_delta: sides do not partition parent");
  const double n = static_cast<double>(h.items());
  const double dp = cluster_density(cluster_weight_fast(h, parent), parent.size());
  const double da = cluster_density(cluster_weight_fast(h, left), left.size());
  const double db = cluster_density(cluster_weight_fast(h, right), right.size());
  const double beta =
      static_cast<double>(left.size()) / static_cast<double>(parent.size());
  return (static_cast<double>(parent.size()) / n) *
         (beta * da + (1.0 - beta) * db - dp);
}

// Recomputes the matrix with the zero vote of each member partitioning
// replaced by the similarity of the two clusters that separate the pair,
// where similarity is the mean raw association between the clusters. A pair
// split by every member thus still receives credit when its two sides are
// associated through the rest of the ensemble. Entries stay in [0, 1] and
// never drop below the raw matrix.
inline CoAssocMatrix enhance_coassociation(const CoAssocMatrix& a,
                                           const ClusterEnsemble& ensemble) {
  const std::size_t n = a.items();
  if (n != ensemble.items())
    throw std::invalid_argument("enhance_coassociation: item count mismatch");
  const std::size_t p = ensemble.size();
  CoAssocMatrix out(n, p);
  std::vector<std::vector<double>> sim_tables;
  sim_tables.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto& pi = ensemble.partitioning(j);
    const std::uint32_t k = pi.cluster_count();
    const auto sizes = pi.cluster_sizes();
    std::vector<double> table(static_cast<std::size_t>(k) * k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const Label li = pi.label(i);
      for (std::size_t i2 = i + 1; i2 < n; ++i2) {
        const Label l2 = pi.label(i2);
        if (li == l2) continue;
        const Label lo = li < l2 ? li : l2, hi = li < l2 ? l2 : li;
        table[static_cast<std::size_t>(lo) * k + hi] += a.at(i, i2);
      }
    }
    for (std::uint32_t x = 0; x < k; ++x) {
      table[static_cast<std::size_t>(x) * k + x] = 1.0;
      for (std::uint32_t y = x + 1; y < k; ++y) {
        const double cross = static_cast<double>(sizes[x]) * static_cast<double>(sizes[y]);
        table[static_cast<std::size_t>(x) * k + y] =
            table[static_cast<std::size_t>(y) * k + x] =
                table[static_cast<std::size_t>(x) * k + y] / cross;
      }
    }
    sim_tables.push_back(std::move(table));
  }
  const double inv_p = 1.0 / static_cast<double>(p);
  for (std::size_t i = 0; i < n; ++i) {
    out.at(i, i) = 1.0;
    for (std::size_t j2 = i + 1; j2 < n; ++j2) {
      double acc = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const auto& pi = ensemble.partitioning(j);
        const Label li = pi.label(i), lj = pi.label(j2);
        acc += (li == lj) ? 1.0 : sim_tables[j][li * pi.cluster_count() + lj];
      }
      out.at(i, j2) = out.at(j2, i) = acc * inv_p;
    }
  }
  return out;
}

// CSV export: dense rows, no header.
inline void write_coassociation_csv(std::ostream& out, const CoAssocMatrix& a) {
  char buf[32];
  for (std::size_t i = 0; i < a.items(); ++i) {
    for (std::size_t j = 0; j < a.items(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", a.at(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

// CSV export: one row per cluster, then a trailing score line.
inline void write_density_report_csv(std::ostream& out, const DensityReport& report) {
  char buf[32];
  out << "cluster,size,weight,density\n";
  for (const auto& cd : report.per_cluster) {
    std::snprintf(buf, sizeof buf, "%.17g", cd.weight);
    out << cd.cluster << ',' << cd.size << ',' << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", cd.density);
    out << buf << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.17g", report.score);
  out << "score," << buf << '\n';
}

}  // namespace eac
