#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace eac {

using Label = std::uint32_t;

// Hard partitioning of n items into k non-empty clusters. Labels are dense
// cluster indices in [0, k); every index occurs at least once.
class Partitioning {
 public:
  Partitioning(std::vector<Label> labels, std::uint32_t k)
      : labels_(std::move(labels)), k_(k) {
    if (labels_.empty()) throw std::invalid_argument("partitioning: no items");
    if (k_ == 0) throw std::invalid_argument("partitioning: k must be positive");
    std::vector<std::uint32_t> seen(k_, 0);
    for (Label l : labels_) {
      if (l >= k_) throw std::invalid_argument("partitioning: label out of range");
      ++seen[l];
    }
    for (std::uint32_t c = 0; c < k_; ++c)
      if (seen[c] == 0)
        throw std::invalid_argument("partitioning: empty cluster " + std::to_string(c));
  }

  std::size_t size() const { return labels_.size(); }
  std::uint32_t cluster_count() const { return k_; }
  const std::vector<Label>& labels() const { return labels_; }
  Label label(std::size_t i) const { return labels_[i]; }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sz(k_, 0);
    for (Label l : labels_) ++sz[l];
    return sz;
  }

  // Derived view; membership lists are not stored.
  std::vector<std::vector<std::uint32_t>> members() const {
    std::vector<std::vector<std::uint32_t>> m(k_);
    for (std::size_t i = 0; i < labels_.size(); ++i)
      m[labels_[i]].push_back(static_cast<std::uint32_t>(i));
    return m;
  }

 private:
  std::vector<Label> labels_;
  std::uint32_t k_;
};

// Compacts arbitrary integer labels to dense cluster indices. The first item
// carrying a raw label determines its compact index, so relabeling is stable
// under item order.
template <class Int>
Partitioning partition_from_labels(const std::vector<Int>& raw) {
  if (raw.empty()) throw std::invalid_argument("partition_from_labels: no items");
  std::unordered_map<long long, Label> remap;
  remap.reserve(raw.size());
  std::vector<Label> labels(raw.size());
  Label next = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, fresh] = remap.emplace(static_cast<long long>(raw[i]), next);
    if (fresh) ++next;
    labels[i] = it->second;
  }
  return Partitioning(std::move(labels), next);
}

// Ensemble of p >= 1 base partitionings over the same item set.
class ClusterEnsemble {
 public:
  explicit ClusterEnsemble(std::vector<Partitioning> parts)
      : parts_(std::move(parts)) {
    if (parts_.empty()) throw std::invalid_argument("ensemble: no partitionings");
    const std::size_t n = parts_.front().size();
    for (const auto& p : parts_)
      if (p.size() != n)
        throw std::invalid_argument("ensemble: partitionings disagree on item count");
  }

  std::size_t items() const { return parts_.front().size(); }
  std::size_t size() const { return parts_.size(); }
  const std::vector<Partitioning>& partitionings() const { return parts_; }
  const Partitioning& partitioning(std::size_t j) const { return parts_[j]; }

  std::size_t total_clusters() const {
    std::size_t d = 0;
    for (const auto& p : parts_) d += p.cluster_count();
    return d;
  }

 private:
  std::vector<Partitioning> parts_;
};

// Binary incidence matrix H of an ensemble: n rows, one column per cluster,
// columns grouped by partitioning and ordered by cluster index within the
// group. Row i holds exactly one 1 per partitioning, so there are exactly p
// non-zeros per row; both a row view and a column view are kept.
class IncidenceMatrix {
 public:
  std::size_t items() const { return n_; }
  std::size_t partitionings() const { return p_; }
  std::size_t columns() const { return col_items_.size(); }

  // The p columns where row i is 1, ascending.
  std::span<const std::uint32_t> row_columns(std::size_t i) const {
    return {row_cols_.data() + i * p_, p_};
  }

  // Items of column f, ascending.
  std::span<const std::uint32_t> column_items(std::size_t f) const {
    return col_items_[f];
  }

  std::size_t column_size(std::size_t f) const { return col_items_[f].size(); }
  std::uint32_t column_owner(std::size_t f) const { return col_owner_[f]; }

  // First column index of partitioning j; entry p is the total column count.
  const std::vector<std::uint32_t>& block_offsets() const { return block_off_; }

  friend IncidenceMatrix build_incidence(const ClusterEnsemble& ensemble);

 private:
  std::size_t n_ = 0, p_ = 0;
  std::vector<std::uint32_t> row_cols_;
  std::vector<std::vector<std::uint32_t>> col_items_;
  std::vector<std::uint32_t> col_owner_;
  std::vector<std::uint32_t> block_off_;
};

inline IncidenceMatrix build_incidence(const ClusterEnsemble& ensemble) {
  IncidenceMatrix h;
  h.n_ = ensemble.items();
  h.p_ = ensemble.size();
  h.block_off_.reserve(h.p_ + 1);
  h.block_off_.push_back(0);
  std::uint32_t base = 0;
  for (std::size_t j = 0; j < h.p_; ++j) {
    base += ensemble.partitioning(j).cluster_count();
    h.block_off_.push_back(base);
  }
  h.col_items_.resize(base);
  h.col_owner_.resize(base);
  for (std::size_t j = 0; j < h.p_; ++j)
    for (std::uint32_t f = h.block_off_[j]; f < h.block_off_[j + 1]; ++f)
      h.col_owner_[f] = static_cast<std::uint32_t>(j);
  h.row_cols_.resize(h.n_ * h.p_);
  for (std::size_t j = 0; j < h.p_; ++j) {
    const auto& labels = ensemble.partitioning(j).labels();
    const std::uint32_t off = h.block_off_[j];
    for (std::size_t i = 0; i < h.n_; ++i) {
      const std::uint32_t f = off + labels[i];
      h.row_cols_[i * h.p_ + j] = f;
      h.col_items_[f].push_back(static_cast<std::uint32_t>(i));
    }
  }
  return h;
}

// Feature matrix with optional ground-truth labels. k0 is the class count
// when labels are present, otherwise a caller-chosen lower bound (default 2).
struct Dataset {
  std::string name;
  std::size_t n = 0;
  std::size_t f = 0;
  std::vector<double> features;  // row-major, n * f
  std::vector<std::string> feature_names;
  std::optional<std::vector<Label>> ground_truth;
  std::uint32_t k0 = 2;

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * f, f};
  }

  void validate() const {
    if (n < 2) throw std::invalid_argument("dataset: need at least 2 rows");
    if (f < 1) throw std::invalid_argument("dataset: need at least 1 feature");
    if (features.size() != n * f)
      throw std::invalid_argument("dataset: feature buffer size mismatch");
    if (ground_truth && ground_truth->size() != n)
      throw std::invalid_argument("dataset: ground truth size mismatch");
  }
};

}  // namespace eac
