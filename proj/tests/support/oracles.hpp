#pragma once

// Reference implementations used only by tests. They recompute everything
// from first principles (label equality, dense rows, exhaustive search) so
// the library's optimized paths are checked against independent code.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "eac/core.hpp"
#include "eac/density.hpp"
#include "eac/graph.hpp"
#include "eac/kmeans.hpp"
#include "eac/rng.hpp"

namespace oracle {

// Co-association straight from label equality, no incidence matrix involved.
inline eac::CoAssocMatrix coassoc_from_labels(const eac::ClusterEnsemble& ens) {
  const std::size_t n = ens.items();
  const std::size_t p = ens.size();
  eac::CoAssocMatrix a(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    a.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      std::size_t same = 0;
      for (std::size_t m = 0; m < p; ++m)
        same += ens.partitioning(m).label(i) == ens.partitioning(m).label(j);
      a.at(i, j) = a.at(j, i) =
          static_cast<double>(same) / static_cast<double>(p);
    }
  }
  return a;
}

// Overall score computed directly from the matrix definition.
inline double direct_score(const eac::CoAssocMatrix& a, const eac::Partitioning& pi) {
  const auto members = pi.members();
  double acc = 0.0;
  for (const auto& m : members) {
    if (m.size() < 2) continue;
    eac::KahanSum w;
    for (std::size_t x = 0; x < m.size(); ++x)
      for (std::size_t y = 0; y < m.size(); ++y)
        if (x != y) w.add(a.at(m[x], m[y]));
    acc += static_cast<double>(m.size()) * w.value() /
           (static_cast<double>(m.size()) * static_cast<double>(m.size() - 1));
  }
  return acc / static_cast<double>(pi.size());
}

// Squared-distance k-means loss on densified incidence rows: centroids are
// cluster means, loss is the plain sum of squared point-centroid distances.
inline double direct_kmeans_loss(const eac::ClusterEnsemble& ens,
                                 const eac::Partitioning& pi) {
  const eac::IncidenceMatrix h = eac::build_incidence(ens);
  const std::size_t n = h.items();
  const std::size_t d = h.columns();
  std::vector<double> rows(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint32_t f : h.row_columns(i)) rows[i * d + f] = 1.0;
  const std::uint32_t k = pi.cluster_count();
  std::vector<double> cent(static_cast<std::size_t>(k) * d, 0.0);
  std::vector<double> count(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    count[pi.label(i)] += 1.0;
    for (std::size_t f = 0; f < d; ++f)
      cent[static_cast<std::size_t>(pi.label(i)) * d + f] += rows[i * d + f];
  }
  for (std::uint32_t c = 0; c < k; ++c)
    for (std::size_t f = 0; f < d; ++f)
      cent[static_cast<std::size_t>(c) * d + f] /= count[c];
  eac::KahanSum loss;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < d; ++f) {
      const double diff =
          rows[i * d + f] - cent[static_cast<std::size_t>(pi.label(i)) * d + f];
      loss.add(diff * diff);
    }
  return loss.value();
}

// Random partitioning with every cluster guaranteed non-empty; k is clamped
// to n so small draws stay valid.
inline eac::Partitioning random_partitioning(eac::Rng& rng, std::size_t n,
                                             std::uint32_t k) {
  k = static_cast<std::uint32_t>(std::min<std::size_t>(k, n));
  std::vector<eac::Label> labels(n);
  for (std::size_t i = 0; i < n; ++i)
    labels[i] = i < k ? static_cast<eac::Label>(i)
                      : static_cast<eac::Label>(rng.below(k));
  rng.shuffle(labels);
  return eac::Partitioning(std::move(labels), k);
}

inline eac::ClusterEnsemble random_ensemble(eac::Rng& rng, std::size_t n,
                                            std::size_t p, std::uint32_t kmax) {
  std::vector<eac::Partitioning> parts;
  parts.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    const std::uint32_t k = static_cast<std::uint32_t>(rng.uniform_int(2, kmax));
    parts.push_back(random_partitioning(rng, n, k));
  }
  return eac::ClusterEnsemble(std::move(parts));
}

// Isotropic Gaussian blobs with shuffled row order.
inline eac::Dataset gaussian_blobs(eac::Rng& rng, std::size_t n, std::size_t f,
                                   std::uint32_t centers, double separation = 6.0,
                                   double spread = 1.0) {
  std::vector<std::vector<double>> mu(centers, std::vector<double>(f));
  for (auto& c : mu)
    for (auto& v : c) v = separation * (rng.next_double() - 0.5) * 2.0;
  std::vector<std::uint32_t> assign(n);
  for (std::size_t i = 0; i < n; ++i)
    assign[i] = i < centers ? static_cast<std::uint32_t>(i)
                            : static_cast<std::uint32_t>(rng.below(centers));
  rng.shuffle(assign);
  eac::Dataset ds;
  ds.name = "blobs";
  ds.n = n;
  ds.f = f;
  ds.features.resize(n * f);
  std::vector<eac::Label> gt(n);
  for (std::size_t i = 0; i < n; ++i) {
    gt[i] = assign[i];
    for (std::size_t c = 0; c < f; ++c)
      ds.features[i * f + c] = mu[assign[i]][c] + spread * rng.normal();
  }
  ds.ground_truth = std::move(gt);
  ds.k0 = centers;
  for (std::size_t c = 0; c < f; ++c) ds.feature_names.push_back("x" + std::to_string(c));
  return ds;
}

// Exhaustive minimum cut over all k-part assignments that keep every part
// non-empty and within the same size cap the library enforces. Canonical
// part numbering (part q appears only after q-1) avoids counting relabelings.
inline double best_balanced_cut(const eac::WeightedGraph& g, std::uint32_t k,
                                double balance_factor) {
  const std::size_t n = g.vertices();
  const std::uint64_t ideal = (n + k - 1) / k;
  const std::uint64_t cap = std::max<std::uint64_t>(
      ideal, static_cast<std::uint64_t>(balance_factor * static_cast<double>(ideal)));
  std::vector<std::uint32_t> part(n, 0);
  std::vector<std::uint64_t> load(k, 0);
  double best = std::numeric_limits<double>::infinity();

  auto partial_cut = [&](std::size_t v) {
    double cut = 0.0;
    auto nb = g.neighbors(static_cast<std::uint32_t>(v));
    for (std::size_t e = 0; e < nb.count; ++e)
      if (nb.adj[e] < v && part[nb.adj[e]] != part[v]) cut += nb.ew[e];
    return cut;
  };

  // depth-first over vertices; `used` = parts already introduced.
  auto rec = [&](auto&& self, std::size_t v, std::uint32_t used,
                 double cut) -> void {
    if (cut >= best) return;
    if (n - v < k - used) return;  // not enough vertices left to fill parts
    if (v == n) {
      if (used == k) best = cut;
      return;
    }
    const std::uint32_t limit = std::min<std::uint32_t>(used + 1, k);
    for (std::uint32_t q = 0; q < limit; ++q) {
      if (load[q] + 1 > cap) continue;
      part[v] = q;
      ++load[q];
      self(self, v + 1, std::max(used, q + 1), cut + partial_cut(v));
      --load[q];
    }
  };
  rec(rec, 0, 0, 0.0);
  return best;
}

}  // namespace oracle
