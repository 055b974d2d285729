#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eac/core.hpp"
#include "eac/density.hpp"
#include "eac/rng.hpp"

namespace eac {

struct KMeansConfig {
  std::uint32_t k = 2;
  std::uint32_t max_iters = 100;
  double tol = 1e-6;  // convergence threshold on relative loss change
  std::uint64_t seed = 0;
  std::uint32_t restarts = 5;

  void validate(std::size_t n) const {
    if (k < 1) throw std::invalid_argument("kmeans: k must be positive");
    if (k > n)
      throw std::invalid_argument("kmeans: k = " + std::to_string(k) +
                                  " exceeds item count " + std::to_string(n));
    if (max_iters < 1) throw std::invalid_argument("kmeans: max_iters must be positive");
    if (!(tol >= 0.0)) throw std::invalid_argument("kmeans: tol must be non-negative");
    if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be positive");
  }
};

struct Divergence {
  enum class Kind { euclidean, weighted, kl };
  Kind kind = Kind::euclidean;
  std::vector<double> weights;  // weighted: one positive weight per item
  double eps = 1e-6;            // kl: smoothing mass

  static Divergence euclidean() { return {}; }
  static Divergence weighted(std::vector<double> w) {
    Divergence d;
    d.kind = Kind::weighted;
    d.weights = std::move(w);
    return d;
  }
  static Divergence kl(double eps = 1e-6) {
    Divergence d;
    d.kind = Kind::kl;
    d.eps = eps;
    return d;
  }
};

struct FitResult {
  Partitioning partitioning;
  double loss = 0.0;
  std::uint32_t iterations = 0;
  bool converged = false;
};

namespace detail {

// Lloyd iteration over an abstract divergence problem. A problem exposes its
// point count, point weights, per-point-per-centroid cost under the current
// centroids, centroid seeding from a single point, and a full centroid
// recomputation from an assignment.
template <class Problem>
struct LloydRun {
  std::vector<Label> labels;
  double loss = 0.0;
  std::uint32_t iterations = 0;
  bool converged = false;
};

template <class Problem>
LloydRun<Problem> lloyd_once(Problem& prob, const KMeansConfig& cfg, Rng& rng) {
  const std::size_t n = prob.size();
  const std::uint32_t k = cfg.k;
  prob.reset(k);

  // k-means++ seeding: first centroid by point weight, the rest by weighted
  // squared divergence to the nearest seeded centroid.
  std::vector<double> mind(n);
  {
    std::vector<double> w0(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += w0[i] = prob.weight(i);
    const std::size_t first = rng.pick_weighted(w0, total);
    prob.seed_from_point(0, first);
    for (std::size_t i = 0; i < n; ++i) mind[i] = prob.cost(i, 0);
    std::vector<double> dist(n);
    for (std::uint32_t c = 1; c < k; ++c) {
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) mass += dist[i] = prob.weight(i) * mind[i];
      const std::size_t pick = mass > 0.0
                                   ? rng.pick_weighted(dist, mass)
                                   : static_cast<std::size_t>(rng.below(n));
      prob.seed_from_point(c, pick);
      for (std::size_t i = 0; i < n; ++i)
        mind[i] = std::min(mind[i], prob.cost(i, c));
    }
  }

  LloydRun<Problem> run;
  run.labels.assign(n, 0);
  std::vector<std::size_t> sizes(k, 0);
  double prev = std::numeric_limits<double>::infinity();
  for (std::uint32_t it = 1; it <= cfg.max_iters; ++it) {
    run.iterations = it;
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      Label best = 0;
      double bc = prob.cost(i, 0);
      for (std::uint32_t c = 1; c < k; ++c) {
        const double cc = prob.cost(i, c);
        if (cc < bc) {
          bc = cc;
          best = c;
        }
      }
      run.labels[i] = best;
      ++sizes[best];
    }
    // Empty clusters seize the point farthest from its current centroid,
    // never the sole member of another cluster.
    for (std::uint32_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t take = n;
      double far = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[run.labels[i]] < 2) continue;
        const double d = prob.cost(i, run.labels[i]);
        if (d > far) {
          far = d;
          take = i;
        }
      }
      --sizes[run.labels[take]];
      run.labels[take] = c;
      sizes[c] = 1;
    }
    prob.update(run.labels, k);
    double cur = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      cur += prob.weight(i) * prob.cost(i, run.labels[i]);
    run.loss = cur;
    if (std::isfinite(prev) && prev - cur <= cfg.tol * std::max(prev, 1e-300)) {
      run.converged = true;
      break;
    }
    prev = cur;
  }
  return run;
}

// Best of cfg.restarts independent runs; ties on loss keep the earliest run.
template <class Problem>
FitResult lloyd_fit(Problem& prob, const KMeansConfig& cfg) {
  cfg.validate(prob.size());
  std::optional<LloydRun<Problem>> best;
  for (std::uint32_t r = 0; r < cfg.restarts; ++r) {
    Rng rng(seed_mix(cfg.seed, r));
    auto run = lloyd_once(prob, cfg, rng);
    if (!best || run.loss < best->loss) best = std::move(run);
  }
  return FitResult{Partitioning(std::move(best->labels), cfg.k), best->loss,
                   best->iterations, best->converged};
}

// Squared Euclidean divergence on dense row-major data, optionally with
// per-point weights. Costs use ||x||^2 - 2 x.mu + ||mu||^2 with cached norms.
class DenseEuclidean {
 public:
  DenseEuclidean(std::size_t n, std::size_t d, const double* x, const double* w)
      : n_(n), d_(d), x_(x), w_(w), xnorm_(n) {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      const double* row = x_ + i * d_;
      for (std::size_t f = 0; f < d_; ++f) s += row[f] * row[f];
      xnorm_[i] = s;
    }
  }

  std::size_t size() const { return n_; }
  double weight(std::size_t i) const { return w_ ? w_[i] : 1.0; }

  void reset(std::uint32_t k) {
    cent_.assign(static_cast<std::size_t>(k) * d_, 0.0);
    cnorm_.assign(k, 0.0);
  }

  void seed_from_point(std::uint32_t c, std::size_t i) {
    std::copy(x_ + i * d_, x_ + (i + 1) * d_, cent_.begin() + c * d_);
    cnorm_[c] = xnorm_[i];
  }

  double cost(std::size_t i, std::uint32_t c) const {
    const double* row = x_ + i * d_;
    const double* mu = cent_.data() + static_cast<std::size_t>(c) * d_;
    double dot = 0.0;
    for (std::size_t f = 0; f < d_; ++f) dot += row[f] * mu[f];
    return std::max(0.0, xnorm_[i] + cnorm_[c] - 2.0 * dot);
  }

  void update(const std::vector<Label>& labels, std::uint32_t k) {
    std::fill(cent_.begin(), cent_.end(), 0.0);
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double w = weight(i);
      double* mu = cent_.data() + static_cast<std::size_t>(labels[i]) * d_;
      const double* row = x_ + i * d_;
      for (std::size_t f = 0; f < d_; ++f) mu[f] += w * row[f];
      mass[labels[i]] += w;
    }
    for (std::uint32_t c = 0; c < k; ++c) {
      double* mu = cent_.data() + static_cast<std::size_t>(c) * d_;
      double s = 0.0;
      if (mass[c] > 0.0)
        for (std::size_t f = 0; f < d_; ++f) {
          mu[f] /= mass[c];
          s += mu[f] * mu[f];
        }
      cnorm_[c] = s;
    }
  }

 private:
  std::size_t n_, d_;
  const double* x_;
  const double* w_;
  std::vector<double> xnorm_, cent_, cnorm_;
};

// Squared Euclidean divergence on incidence rows, restricted to an item
// subset. Rows have exactly p non-zeros, all equal to an optional per-item
// scale, so norms and dot products cost O(p) each.
class SparseEuclidean {
 public:
  SparseEuclidean(const IncidenceMatrix& h, std::vector<std::uint32_t> items,
                  const double* scale, const double* w)
      : h_(h), items_(std::move(items)), scale_(scale), w_(w) {}

  std::size_t size() const { return items_.size(); }
  double weight(std::size_t t) const { return w_ ? w_[items_[t]] : 1.0; }

  void reset(std::uint32_t k) {
    d_ = h_.columns();
    cent_.assign(static_cast<std::size_t>(k) * d_, 0.0);
    cnorm_.assign(k, 0.0);
  }

  void seed_from_point(std::uint32_t c, std::size_t t) {
    double* mu = cent_.data() + static_cast<std::size_t>(c) * d_;
    std::fill(mu, mu + d_, 0.0);
    const double s = row_scale(t);
    for (std::uint32_t f : h_.row_columns(items_[t])) mu[f] = s;
    cnorm_[c] = row_norm(t);
  }

  double cost(std::size_t t, std::uint32_t c) const {
    const double* mu = cent_.data() + static_cast<std::size_t>(c) * d_;
    double dot = 0.0;
    for (std::uint32_t f : h_.row_columns(items_[t])) dot += mu[f];
    dot *= row_scale(t);
    return std::max(0.0, row_norm(t) + cnorm_[c] - 2.0 * dot);
  }

  void update(const std::vector<Label>& labels, std::uint32_t k) {
    std::fill(cent_.begin(), cent_.end(), 0.0);
    std::vector<double> mass(k, 0.0);
    for (std::size_t t = 0; t < items_.size(); ++t) {
      const double w = weight(t);
      double* mu = cent_.data() + static_cast<std::size_t>(labels[t]) * d_;
      const double add = w * row_scale(t);
      for (std::uint32_t f : h_.row_columns(items_[t])) mu[f] += add;
      mass[labels[t]] += w;
    }
    for (std::uint32_t c = 0; c < k; ++c) {
      double* mu = cent_.data() + static_cast<std::size_t>(c) * d_;
      double s = 0.0;
      if (mass[c] > 0.0)
        for (std::size_t f = 0; f < d_; ++f) {
          mu[f] /= mass[c];
          s += mu[f] * mu[f];
        }
      cnorm_[c] = s;
    }
  }

 private:
  double row_scale(std::size_t t) const { return scale_ ? scale_[items_[t]] : 1.0; }
  double row_norm(std::size_t t) const {
    const double s = row_scale(t);
    return static_cast<double>(h_.partitionings()) * s * s;
  }

  const IncidenceMatrix& h_;
  std::vector<std::uint32_t> items_;
  const double* scale_;
  const double* w_;
  std::size_t d_ = 0;
  std::vector<double> cent_, cnorm_;
};

// KL divergence on incidence rows. Each row is read as p block-wise one-hot
// distributions mixed with eps uniform mass and renormalized, which keeps
// every coordinate positive. Because rows and centroids both sum to p, the
// generalized-divergence linear terms cancel and the cost reduces to
// sum(x * log(x / mu)). Row entropy is identical across rows, and log mu is
// cached per centroid, so a cost evaluation is O(p).
class SparseKl {
 public:
  SparseKl(const IncidenceMatrix& h, double eps) : h_(h), eps_(eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("kl: eps must be positive");
    const auto& off = h_.block_offsets();
    const std::size_t p = h_.partitionings();
    lo_.resize(p);
    hi_.resize(p);
    rowxlogx_ = 0.0;
    for (std::size_t b = 0; b < p; ++b) {
      const double kb = static_cast<double>(off[b + 1] - off[b]);
      lo_[b] = (eps_ / kb) / (1.0 + eps_);
      hi_[b] = (1.0 + eps_ / kb) / (1.0 + eps_);
      rowxlogx_ += hi_[b] * std::log(hi_[b]);
      if (kb > 1.0) rowxlogx_ += (kb - 1.0) * lo_[b] * std::log(lo_[b]);
    }
  }

  std::size_t size() const { return h_.items(); }
  double weight(std::size_t) const { return 1.0; }

  void reset(std::uint32_t k) {
    d_ = h_.columns();
    logmu_.assign(static_cast<std::size_t>(k) * d_, 0.0);
    tail_.assign(k, 0.0);
    alpha_.assign(static_cast<std::size_t>(k) * d_, 0);
  }

  void seed_from_point(std::uint32_t c, std::size_t i) {
    double* lm = logmu_.data() + static_cast<std::size_t>(c) * d_;
    for (std::size_t f = 0; f < d_; ++f) lm[f] = std::log(lo_[h_.column_owner(f)]);
    for (std::uint32_t f : h_.row_columns(i))
      lm[f] = std::log(hi_[h_.column_owner(f)]);
    refresh_tail(c);
  }

  double cost(std::size_t i, std::uint32_t c) const {
    const double* lm = logmu_.data() + static_cast<std::size_t>(c) * d_;
    double hot = 0.0;
    std::size_t b = 0;
    for (std::uint32_t f : h_.row_columns(i)) {
      hot += (hi_[b] - lo_[b]) * lm[f];
      ++b;
    }
    return std::max(0.0, rowxlogx_ - tail_[c] - hot);
  }

  void update(const std::vector<Label>& labels, std::uint32_t k) {
    std::fill(alpha_.begin(), alpha_.end(), 0);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < h_.items(); ++i) {
      ++sizes[labels[i]];
      std::uint32_t* row = alpha_.data() + static_cast<std::size_t>(labels[i]) * d_;
      for (std::uint32_t f : h_.row_columns(i)) ++row[f];
    }
    const auto& off = h_.block_offsets();
    for (std::uint32_t c = 0; c < k; ++c) {
      const double sz = static_cast<double>(sizes[c]);
      double* lm = logmu_.data() + static_cast<std::size_t>(c) * d_;
      const std::uint32_t* row = alpha_.data() + static_cast<std::size_t>(c) * d_;
      if (sizes[c] == 0) continue;  // repaired by the caller before update
      for (std::size_t b = 0; b + 1 < off.size(); ++b) {
        const double kb = static_cast<double>(off[b + 1] - off[b]);
        const double denom = sz * (1.0 + eps_);
        for (std::uint32_t f = off[b]; f < off[b + 1]; ++f)
          lm[f] = std::log((static_cast<double>(row[f]) + sz * eps_ / kb) / denom);
      }
      refresh_tail(c);
    }
  }

 private:
  void refresh_tail(std::uint32_t c) {
    const auto& off = h_.block_offsets();
    const double* lm = logmu_.data() + static_cast<std::size_t>(c) * d_;
    double t = 0.0;
    for (std::size_t b = 0; b + 1 < off.size(); ++b) {
      double s = 0.0;
      for (std::uint32_t f = off[b]; f < off[b + 1]; ++f) s += lm[f];
      t += lo_[b] * s;
    }
    tail_[c] = t;
  }

  const IncidenceMatrix& h_;
  double eps_;
  std::size_t d_ = 0;
  std::vector<double> lo_, hi_;
  double rowxlogx_ = 0.0;
  std::vector<double> logmu_, tail_;
  std::vector<std::uint32_t> alpha_;
};

// KL divergence on dense non-negative rows: each row is normalized to a
// distribution and mixed with eps uniform mass over the full row.
class DenseKl {
 public:
  DenseKl(std::size_t n, std::size_t d, const double* x, double eps)
      : n_(n), d_(d), rows_(n * d), xlogx_(n) {
    if (!(eps > 0.0)) throw std::invalid_argument("kl: eps must be positive");
    for (std::size_t i = 0; i < n_; ++i) {
      double sum = 0.0;
      for (std::size_t f = 0; f < d_; ++f) {
        const double v = x[i * d_ + f];
        if (v < 0.0) throw std::invalid_argument("kl: negative feature value");
        sum += v;
      }
      if (!(sum > 0.0)) throw std::invalid_argument("kl: zero row");
      double h = 0.0;
      for (std::size_t f = 0; f < d_; ++f) {
        const double v = (x[i * d_ + f] / sum + eps / static_cast<double>(d_)) /
                         (1.0 + eps);
        rows_[i * d_ + f] = v;
        h += v * std::log(v);
      }
      xlogx_[i] = h;
    }
  }

  std::size_t size() const { return n_; }
  double weight(std::size_t) const { return 1.0; }

  void reset(std::uint32_t k) {
    logmu_.assign(static_cast<std::size_t>(k) * d_, 0.0);
  }

  void seed_from_point(std::uint32_t c, std::size_t i) {
    double* lm = logmu_.data() + static_cast<std::size_t>(c) * d_;
    for (std::size_t f = 0; f < d_; ++f) lm[f] = std::log(rows_[i * d_ + f]);
  }

  double cost(std::size_t i, std::uint32_t c) const {
    const double* row = rows_.data() + i * d_;
    const double* lm = logmu_.data() + static_cast<std::size_t>(c) * d_;
    double dot = 0.0;
    for (std::size_t f = 0; f < d_; ++f) dot += row[f] * lm[f];
    return std::max(0.0, xlogx_[i] - dot);
  }

  void update(const std::vector<Label>& labels, std::uint32_t k) {
    std::vector<double> mu(static_cast<std::size_t>(k) * d_, 0.0);
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      double* m = mu.data() + static_cast<std::size_t>(labels[i]) * d_;
      for (std::size_t f = 0; f < d_; ++f) m[f] += rows_[i * d_ + f];
      mass[labels[i]] += 1.0;
    }
    for (std::uint32_t c = 0; c < k; ++c) {
      if (mass[c] == 0.0) continue;
      double* lm = logmu_.data() + static_cast<std::size_t>(c) * d_;
      const double* m = mu.data() + static_cast<std::size_t>(c) * d_;
      for (std::size_t f = 0; f < d_; ++f) lm[f] = std::log(m[f] / mass[c]);
    }
  }

 private:
  std::size_t n_, d_;
  std::vector<double> rows_, xlogx_, logmu_;
};

inline void check_weights(const Divergence& div, std::size_t n) {
  if (div.weights.size() != n)
    throw std::invalid_argument("kmeans: weight vector size mismatch");
  for (double w : div.weights)
    if (!(w > 0.0)) throw std::invalid_argument("kmeans: weights must be positive");
}

}  // namespace detail

// Lloyd k-means on a dense row-major matrix under the requested divergence.
inline FitResult kmeans_fit(std::size_t n, std::size_t d, const double* x,
                            const KMeansConfig& cfg,
                            const Divergence& div = Divergence::euclidean()) {
  switch (div.kind) {
    case Divergence::Kind::euclidean: {
      detail::DenseEuclidean prob(n, d, x, nullptr);
      return detail::lloyd_fit(prob, cfg);
    }
    case Divergence::Kind::weighted: {
      detail::check_weights(div, n);
      detail::DenseEuclidean prob(n, d, x, div.weights.data());
      return detail::lloyd_fit(prob, cfg);
    }
    case Divergence::Kind::kl: {
      detail::DenseKl prob(n, d, x, div.eps);
      return detail::lloyd_fit(prob, cfg);
    }
  }
  throw std::logic_error("kmeans: unknown divergence");
}

inline FitResult kmeans_fit(const Dataset& ds, const KMeansConfig& cfg,
                            const Divergence& div = Divergence::euclidean()) {
  return kmeans_fit(ds.n, ds.f, ds.features.data(), cfg, div);
}

// Lloyd k-means directly on incidence rows. row_scale, when given, rescales
// row i to row_scale[i] at its non-zero columns (used by the per-item
// normalization transform); it applies to the Euclidean kinds only.
inline FitResult kmeans_fit_incidence(const IncidenceMatrix& h,
                                      const KMeansConfig& cfg,
                                      const Divergence& div = Divergence::euclidean(),
                                      const double* row_scale = nullptr) {
  switch (div.kind) {
    case Divergence::Kind::euclidean:
    case Divergence::Kind::weighted: {
      const double* w = nullptr;
      if (div.kind == Divergence::Kind::weighted) {
        detail::check_weights(div, h.items());
        w = div.weights.data();
      }
      std::vector<std::uint32_t> all(h.items());
      for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = static_cast<std::uint32_t>(i);
      detail::SparseEuclidean prob(h, std::move(all), row_scale, w);
      return detail::lloyd_fit(prob, cfg);
    }
    case Divergence::Kind::kl: {
      if (row_scale)
        throw std::invalid_argument("kmeans: row_scale is not defined for kl");
      detail::SparseKl prob(h, div.eps);
      return detail::lloyd_fit(prob, cfg);
    }
  }
  throw std::logic_error("kmeans: unknown divergence");
}

// Euclidean k-means loss of a partitioning over incidence rows, computed from
// column counts: p * n - sum over clusters of sum(alpha^2) / |C|.
inline double kmeans_loss(const IncidenceMatrix& h, const Partitioning& pi) {
  if (pi.size() != h.items())
    throw std::invalid_argument("kmeans_loss: item count mismatch");
  std::vector<std::uint32_t> count(h.columns(), 0);
  std::vector<std::uint32_t> touched;
  const auto members = pi.members();
  KahanSum acc;
  for (const auto& m : members) {
    touched.clear();
    for (std::uint32_t i : m)
      for (std::uint32_t f : h.row_columns(i)) {
        if (count[f]++ == 0) touched.push_back(f);
      }
    std::uint64_t sq = 0;
    for (std::uint32_t f : touched) {
      sq += static_cast<std::uint64_t>(count[f]) * count[f];
      count[f] = 0;
    }
    acc.add(static_cast<double>(sq) / static_cast<double>(m.size()));
  }
  return static_cast<double>(h.partitionings()) * static_cast<double>(h.items()) -
         acc.value();
}

struct SplitStep {
  std::uint32_t cluster = 0;  // slot index at the time of the split
  std::size_t parent_size = 0, left_size = 0, right_size = 0;
  double delta = 0.0;  // score change the split contributed
};

struct BisectResult {
  FitResult fit;
  std::vector<SplitStep> steps;
};

// Bisecting k-means on incidence rows: repeatedly 2-split the cluster whose
// best split raises the overall score the most. Each candidate split is the
// best of kBisectRestarts 2-means runs; candidates are cached per cluster and
// only recomputed for clusters created by the previous step.
inline constexpr std::uint32_t kBisectRestarts = 3;

inline BisectResult bisecting_fit(const IncidenceMatrix& h, std::uint32_t k_target,
                                  const KMeansConfig& cfg) {
  const std::size_t n = h.items();
  if (k_target < 1) throw std::invalid_argument("bisecting: k_target must be positive");
  if (k_target > n)
    throw std::invalid_argument("bisecting: k_target exceeds item count");

  struct Slot {
    std::vector<std::uint32_t> members;
    std::uint64_t uid = 0;  // creation sequence number, drives split seeding
    bool has_candidate = false;
    double delta = 0.0;
    std::vector<std::uint32_t> left, right;
  };
  std::vector<Slot> slots(1);
  slots[0].members.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    slots[0].members[i] = static_cast<std::uint32_t>(i);
  std::uint64_t next_uid = 1;

  std::vector<SplitStep> steps;
  auto refresh = [&](Slot& slot) {
    if (slot.has_candidate || slot.members.size() < 2) return;
    KMeansConfig sub = cfg;
    sub.k = 2;
    sub.restarts = kBisectRestarts;
    sub.seed = seed_mix(cfg.seed, slot.uid);
    detail::SparseEuclidean prob(h, slot.members, nullptr, nullptr);
    const FitResult two = detail::lloyd_fit(prob, sub);
    slot.left.clear();
    slot.right.clear();
    for (std::size_t t = 0; t < slot.members.size(); ++t)
      (two.partitioning.label(t) == 0 ? slot.left : slot.right)
          .push_back(slot.members[t]);
    slot.delta = split_delta(h, slot.members, slot.left, slot.right);
    slot.has_candidate = true;
  };

  while (slots.size() < k_target) {
    for (auto& s : slots) refresh(s);
    std::size_t pick = slots.size();
    for (std::size_t s = 0; s < slots.size(); ++s) {
      if (!slots[s].has_candidate) continue;
      if (pick == slots.size() || slots[s].delta > slots[pick].delta) pick = s;
    }
    if (pick == slots.size())
      throw std::invalid_argument("bisecting: no splittable cluster left");
    Slot& parent = slots[pick];
    steps.push_back(SplitStep{static_cast<std::uint32_t>(pick),
                              parent.members.size(), parent.left.size(),
                              parent.right.size(), parent.delta});
    Slot right;
    right.members = std::move(parent.right);
    right.uid = next_uid + 1;
    parent.members = std::move(parent.left);
    parent.uid = next_uid;
    next_uid += 2;
    parent.has_candidate = false;
    parent.left.clear();
    parent.right.clear();
    slots.push_back(std::move(right));
  }

  std::vector<Label> labels(n, 0);
  for (std::size_t s = 0; s < slots.size(); ++s)
    for (std::uint32_t i : slots[s].members) labels[i] = static_cast<Label>(s);
  Partitioning pi(std::move(labels), static_cast<std::uint32_t>(slots.size()));
  const double loss = kmeans_loss(h, pi);
  FitResult fit{std::move(pi), loss, static_cast<std::uint32_t>(steps.size()), true};
  return BisectResult{std::move(fit), std::move(steps)};
}

// Base ensemble: p Euclidean k-means runs on the (already normalized) feature
// matrix, each with k drawn uniformly from [k0, min(floor(sqrt(n)), 100)].
// All k draws come from one stream derived from the seed, then each run gets
// its own derived seed, so the ensemble is a pure function of (data, p, seed).
inline ClusterEnsemble generate_base_clusterings(const Dataset& ds, std::size_t p,
                                                 std::uint64_t seed) {
  ds.validate();
  if (p < 1) throw std::invalid_argument("base clusterings: p must be positive");
  std::size_t root = static_cast<std::size_t>(std::sqrt(static_cast<double>(ds.n)));
  while ((root + 1) * (root + 1) <= ds.n) ++root;
  while (root * root > ds.n) --root;
  const std::uint32_t kmax =
      static_cast<std::uint32_t>(std::min<std::size_t>(root, 100));
  const std::uint32_t k0 = std::max<std::uint32_t>(ds.k0, 2);
  if (k0 > kmax)
    throw std::invalid_argument("base clusterings: k0 = " + std::to_string(k0) +
                                " exceeds max k " + std::to_string(kmax));
  Rng kdraw(seed_mix(seed, 0x6b));
  std::vector<std::uint32_t> ks(p);
  for (auto& k : ks)
    k = static_cast<std::uint32_t>(kdraw.uniform_int(k0, kmax));
  std::vector<Partitioning> parts;
  parts.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    KMeansConfig cfg;
    cfg.k = ks[j];
    cfg.restarts = 1;  // diversity across members matters more than each fit
    cfg.seed = seed_mix(seed, 0x1000 + j);
    parts.push_back(kmeans_fit(ds, cfg).partitioning);
  }
  return ClusterEnsemble(std::move(parts));
}

}  // namespace eac
