#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "eac/core.hpp"
#include "eac/density.hpp"
#include "eac/graph.hpp"
#include "eac/kmeans.hpp"

namespace eac {

enum class Algorithm { eac_km, h_km, sec, ecc, mcla, cspa, hier };

enum class Linkage { single, average, maximum };

enum class CaKind { raw, enhanced };

struct ConsensusOptions {
  Linkage linkage = Linkage::average;  // hier only
  CaKind ca = CaKind::raw;             // hier and cspa: which matrix to cut
  double kl_eps = 1e-6;                // ecc smoothing
  double balance_factor = 1.1;         // mcla and cspa graph cuts
  std::size_t matrix_cap = kDefaultOracleCap;
  KMeansConfig kmeans;  // k and seed are overridden per request
};

struct ConsensusRequest {
  Algorithm algorithm = Algorithm::eac_km;
  std::uint32_t k_out = 2;
  std::uint64_t seed = 0;
  ConsensusOptions options;
};

inline Algorithm parse_algorithm(const std::string& name) {
  if (name == "eac_km") return Algorithm::eac_km;
  if (name == "h_km") return Algorithm::h_km;
  if (name == "sec") return Algorithm::sec;
  if (name == "ecc") return Algorithm::ecc;
  if (name == "mcla") return Algorithm::mcla;
  if (name == "cspa") return Algorithm::cspa;
  if (name == "hier") return Algorithm::hier;
  throw std::invalid_argument("unknown algorithm: '" + name + "'");
}

inline std::string linkage_name(Linkage l) {
  switch (l) {
    case Linkage::single: return "SL";
    case Linkage::average: return "AL";
    case Linkage::maximum: return "ML";
  }
  return "?";
}

inline Linkage parse_linkage(const std::string& name) {
  if (name == "SL" || name == "single") return Linkage::single;
  if (name == "AL" || name == "average") return Linkage::average;
  if (name == "ML" || name == "maximum") return Linkage::maximum;
  throw std::invalid_argument("unknown linkage: '" + name + "'");
}

inline CaKind parse_ca_kind(const std::string& name) {
  if (name == "raw") return CaKind::raw;
  if (name == "enhanced") return CaKind::enhanced;
  throw std::invalid_argument("unknown matrix kind: '" + name + "'");
}

// Record / report label, e.g. "eac_km" or "hier-AL-raw".
inline std::string algorithm_label(const ConsensusRequest& req) {
  switch (req.algorithm) {
    case Algorithm::eac_km: return "eac_km";
    case Algorithm::h_km: return "h_km";
    case Algorithm::sec: return "sec";
    case Algorithm::ecc: return "ecc";
    case Algorithm::mcla: return "mcla";
    case Algorithm::cspa: return "cspa";
    case Algorithm::hier:
      return "hier-" + linkage_name(req.options.linkage) + "-" +
             (req.options.ca == CaKind::raw ? "raw" : "enhanced");
  }
  return "?";
}

// Per-item scale and weight of the size-normalized transform: each incidence
// row is divided by the total size of the clusters containing the item, and
// that same total becomes the item's k-means weight.
struct SizeNormalization {
  std::vector<double> scale;    // 1 / w_i
  std::vector<double> weights;  // w_i
};

inline SizeNormalization sec_transform(const IncidenceMatrix& h) {
  SizeNormalization out;
  const std::size_t n = h.items();
  out.scale.resize(n);
  out.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t w = 0;
    for (std::uint32_t f : h.row_columns(i)) w += h.column_size(f);
    out.weights[i] = static_cast<double>(w);
    out.scale[i] = 1.0 / static_cast<double>(w);
  }
  return out;
}

namespace detail {

// Agglomeration over a similarity matrix with a lazy-invalidation heap:
// entries carry the cluster versions they were computed against and are
// discarded on pop when stale. Merge partner similarities follow the linkage
// rule; equal-similarity ties merge the lexicographically smallest id pair.
class LinkageState {
 public:
  LinkageState(const CoAssocMatrix& a, Linkage rule)
      : n_(a.items()), rule_(rule), sim_(a.values()), active_(n_, true),
        version_(n_, 0), size_(n_, 1), members_(n_) {
    for (std::size_t i = 0; i < n_; ++i)
      members_[i].push_back(static_cast<std::uint32_t>(i));
    for (std::uint32_t i = 0; i < n_; ++i)
      for (std::uint32_t j = i + 1; j < n_; ++j) push(i, j);
  }

  std::size_t merges_done() const { return merges_; }
  std::size_t active_clusters() const { return n_ - merges_; }

  // One merge step; false when no mergeable pair remains.
  bool step() {
    Entry e;
    for (;;) {
      if (heap_.empty()) return false;
      e = heap_.top();
      heap_.pop();
      if (active_[e.a] && active_[e.b] && version_[e.a] == e.va &&
          version_[e.b] == e.vb)
        break;
    }
    const std::uint32_t a = e.a, b = e.b;  // a < b; the merge keeps id a
    for (std::uint32_t x = 0; x < n_; ++x) {
      if (!active_[x] || x == a || x == b) continue;
      const double sax = sim_[idx(a, x)];
      const double sbx = sim_[idx(b, x)];
      double s = 0.0;
      switch (rule_) {
        case Linkage::single: s = std::max(sax, sbx); break;
        case Linkage::maximum: s = std::min(sax, sbx); break;
        case Linkage::average:
          s = (static_cast<double>(size_[a]) * sax +
               static_cast<double>(size_[b]) * sbx) /
              static_cast<double>(size_[a] + size_[b]);
          break;
      }
      sim_[idx(a, x)] = sim_[idx(x, a)] = s;
    }
    active_[b] = false;
    size_[a] += size_[b];
    members_[a].insert(members_[a].end(), members_[b].begin(), members_[b].end());
    members_[b].clear();
    members_[b].shrink_to_fit();
    ++version_[a];
    for (std::uint32_t x = 0; x < n_; ++x)
      if (active_[x] && x != a) push(std::min(a, x), std::max(a, x));
    ++merges_;
    return true;
  }

  // Labels of the current clustering, clusters ordered by ascending id.
  Partitioning extract() const {
    std::vector<Label> labels(n_, 0);
    Label next = 0;
    for (std::uint32_t c = 0; c < n_; ++c) {
      if (!active_[c]) continue;
      for (std::uint32_t i : members_[c]) labels[i] = next;
      ++next;
    }
    return Partitioning(std::move(labels), next);
  }

 private:
  struct Entry {
    double sim;
    std::uint32_t a, b, va, vb;
  };
  struct Worse {
    bool operator()(const Entry& x, const Entry& y) const {
      if (x.sim != y.sim) return x.sim < y.sim;
      if (x.a != y.a) return x.a > y.a;
      return x.b > y.b;
    }
  };

  std::size_t idx(std::size_t i, std::size_t j) const { return i * n_ + j; }

  void push(std::uint32_t a, std::uint32_t b) {
    heap_.push(Entry{sim_[idx(a, b)], a, b, version_[a], version_[b]});
  }

  std::size_t n_;
  Linkage rule_;
  std::vector<double> sim_;
  std::vector<bool> active_;
  std::vector<std::uint32_t> version_;
  std::vector<std::uint32_t> size_;
  std::vector<std::vector<std::uint32_t>> members_;
  std::priority_queue<Entry, std::vector<Entry>, Worse> heap_;
  std::size_t merges_ = 0;
};

}  // namespace detail

// Shared per-ensemble state for running several consensus algorithms: the
// incidence matrix is built once and co-association matrices are cached by
// kind on first use.
class ConsensusRunner {
 public:
  explicit ConsensusRunner(const ClusterEnsemble& ensemble)
      : ens_(ensemble), h_(build_incidence(ensemble)) {}

  const ClusterEnsemble& ensemble() const { return ens_; }
  const IncidenceMatrix& incidence() const { return h_; }

  const CoAssocMatrix& coassoc(CaKind kind, std::size_t cap) {
    auto& slot = kind == CaKind::raw ? a_raw_ : a_enh_;
    if (!slot) {
      if (kind == CaKind::raw) {
        slot = coassociation(h_, cap);
      } else {
        slot = enhance_coassociation(coassoc(CaKind::raw, cap), ens_);
      }
    }
    return *slot;
  }

  FitResult run(const ConsensusRequest& req) {
    const std::size_t n = ens_.items();
    if (req.k_out < 2)
      throw std::invalid_argument("consensus: k_out must be at least 2");
    if (req.k_out > n)
      throw std::invalid_argument("consensus: k_out exceeds item count");
    switch (req.algorithm) {
      case Algorithm::eac_km: {
        KMeansConfig cfg = base_config(req);
        return kmeans_fit_incidence(h_, cfg);
      }
      case Algorithm::h_km: {
        KMeansConfig cfg = base_config(req);
        return bisecting_fit(h_, req.k_out, cfg).fit;
      }
      case Algorithm::sec: {
        KMeansConfig cfg = base_config(req);
        const SizeNormalization t = sec_transform(h_);
        return kmeans_fit_incidence(h_, cfg, Divergence::weighted(t.weights),
                                    t.scale.data());
      }
      case Algorithm::ecc: {
        KMeansConfig cfg = base_config(req);
        return kmeans_fit_incidence(h_, cfg, Divergence::kl(req.options.kl_eps));
      }
      case Algorithm::mcla:
        return run_mcla(req);
      case Algorithm::cspa:
        return run_cspa(req);
      case Algorithm::hier:
        return run_hier(req);
    }
    throw std::logic_error("consensus: unknown algorithm");
  }

 private:
  KMeansConfig base_config(const ConsensusRequest& req) const {
    KMeansConfig cfg = req.options.kmeans;
    cfg.k = req.k_out;
    cfg.seed = req.seed;
    return cfg;
  }

  // Meta-clustering of base clusters: nodes are ensemble clusters, edges are
  // Jaccard similarities between clusters of different partitionings. The
  // node graph is cut into k_out balanced metas; each item joins the meta in
  // which its own clusters are the largest fraction of the meta (ties to the
  // lowest meta id). Metas never hit by an argmax vanish, so the result can
  // carry fewer than k_out clusters.
  FitResult run_mcla(const ConsensusRequest& req) {
    const std::size_t n = ens_.items();
    const std::size_t d = h_.columns();
    const std::size_t p = ens_.size();
    if (req.k_out > d)
      throw std::invalid_argument("mcla: k_out exceeds base cluster count");
    std::vector<std::uint32_t> inter(d * d, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto cols = h_.row_columns(i);
      for (std::size_t x = 0; x < p; ++x)
        for (std::size_t y = x + 1; y < p; ++y)
          ++inter[cols[x] * d + cols[y]];
    }
    std::vector<GraphEdge> edges;
    for (std::uint32_t a = 0; a < d; ++a)
      for (std::uint32_t b = a + 1; b < d; ++b) {
        if (h_.column_owner(a) == h_.column_owner(b)) continue;
        const std::uint32_t common = inter[a * d + b];
        if (common == 0) continue;
        const double uni = static_cast<double>(h_.column_size(a)) +
                           static_cast<double>(h_.column_size(b)) -
                           static_cast<double>(common);
        edges.push_back(
            GraphEdge{a, b, static_cast<double>(common) / uni});
      }
    WeightedGraph meta = WeightedGraph::from_edges(d, std::move(edges));
    PartitionResult cut =
        partition_graph(meta, req.k_out, req.options.balance_factor, req.seed);
    std::vector<std::uint32_t> meta_size(req.k_out, 0);
    for (std::uint32_t f = 0; f < d; ++f) ++meta_size[cut.part[f]];
    std::vector<std::uint32_t> votes(req.k_out);
    std::vector<Label> winner(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(votes.begin(), votes.end(), 0);
      for (std::uint32_t f : h_.row_columns(i)) ++votes[cut.part[f]];
      std::uint32_t best = 0;
      double best_score = -1.0;
      for (std::uint32_t m = 0; m < req.k_out; ++m) {
        const double score =
            static_cast<double>(votes[m]) / static_cast<double>(meta_size[m]);
        if (score > best_score) {
          best_score = score;
          best = m;
        }
      }
      winner[i] = best;
    }
    Partitioning pi = partition_from_labels(winner);
    return FitResult{std::move(pi), cut.edge_cut, 1, true};
  }

  // Item graph weighted by co-association, cut into k_out balanced parts.
  FitResult run_cspa(const ConsensusRequest& req) {
    const std::size_t n = ens_.items();
    const CoAssocMatrix& a = coassoc(req.options.ca, req.options.matrix_cap);
    std::vector<GraphEdge> edges;
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j)
        if (a.at(i, j) > 0.0) edges.push_back(GraphEdge{i, j, a.at(i, j)});
    WeightedGraph g = WeightedGraph::from_edges(n, std::move(edges));
    PartitionResult cut =
        partition_graph(g, req.k_out, req.options.balance_factor, req.seed);
    Partitioning pi(std::vector<Label>(cut.part.begin(), cut.part.end()),
                    req.k_out);
    return FitResult{std::move(pi), cut.edge_cut, 1, true};
  }

  // Agglomerate items under the configured linkage until k_out clusters are
  // left; early abort, the dendrogram above that point is never built.
  FitResult run_hier(const ConsensusRequest& req) {
    const std::size_t n = ens_.items();
    const CoAssocMatrix& a = coassoc(req.options.ca, req.options.matrix_cap);
    detail::LinkageState state(a, req.options.linkage);
    while (state.active_clusters() > req.k_out)
      if (!state.step())
        throw std::logic_error("hier: heap exhausted before reaching k_out");
    return FitResult{state.extract(),
                     0.0,
                     static_cast<std::uint32_t>(state.merges_done()),
                     true};
  }

  const ClusterEnsemble& ens_;
  IncidenceMatrix h_;
  std::optional<CoAssocMatrix> a_raw_, a_enh_;
};

inline FitResult run_consensus(const ClusterEnsemble& ensemble,
                               const ConsensusRequest& req) {
  ConsensusRunner runner(ensemble);
  return runner.run(req);
}

}  // namespace eac
