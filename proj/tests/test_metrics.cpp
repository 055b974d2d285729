#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "eac/metrics.hpp"
#include "eac/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace eac;
using Catch::Matchers::WithinAbs;

TEST_CASE("nmi on the frozen pair") {
  const Partitioning a({0, 0, 1, 1}, 2);
  const Partitioning b({0, 1, 2, 2}, 3);
  CHECK_THAT(nmi(a, b), WithinAbs(0.8, 1e-12));
  CHECK_THAT(nmi(b, a), WithinAbs(0.8, 1e-12));
}

TEST_CASE("contingency counts") {
  const Partitioning a({0, 0, 1, 1}, 2);
  const Partitioning b({0, 1, 2, 2}, 3);
  const ContingencyTable t = contingency(a, b);
  CHECK(t.n == 4);
  CHECK(t.at(0, 0) == 1);
  CHECK(t.at(0, 1) == 1);
  CHECK(t.at(1, 2) == 2);
  CHECK(t.at(1, 0) == 0);
  CHECK(t.row_sum == std::vector<std::uint64_t>{2, 2});
  CHECK(t.col_sum == std::vector<std::uint64_t>{1, 1, 2});
}

TEST_CASE("nmi axioms on random partitionings") {
  Rng rng(7);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 4 + rng.below(60);
    const auto a = oracle::random_partitioning(
        rng, n, 1 + static_cast<std::uint32_t>(rng.below(std::min<std::size_t>(n, 6))));
    const auto b = oracle::random_partitioning(
        rng, n, 1 + static_cast<std::uint32_t>(rng.below(std::min<std::size_t>(n, 6))));
    const double v = nmi(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK_THAT(nmi(b, a), WithinAbs(v, 1e-12));
    CHECK_THAT(nmi(a, a), WithinAbs(1.0, 1e-12));

    // invariance under cluster relabeling
    std::vector<Label> perm(a.cluster_count());
    for (std::uint32_t c = 0; c < perm.size(); ++c) perm[c] = c;
    rng.shuffle(perm);
    std::vector<Label> relabeled(n);
    for (std::size_t i = 0; i < n; ++i) relabeled[i] = perm[a.label(i)];
    const Partitioning ap(std::move(relabeled), a.cluster_count());
    CHECK_THAT(nmi(ap, b), WithinAbs(v, 1e-12));
  }
}

TEST_CASE("nmi degenerate rules") {
  const Partitioning single3({0, 0, 0}, 1);
  const Partitioning split3({0, 1, 0}, 2);
  CHECK(nmi(single3, single3) == 1.0);
  CHECK(nmi(single3, split3) == 0.0);
  CHECK(nmi(split3, single3) == 0.0);
}

TEST_CASE("ensemble nmi is the mean over members") {
  const auto ens = fixtures::tri_ensemble();
  const Partitioning pi({0, 0, 1}, 2);
  const double expect =
      (nmi(pi, ens.partitioning(0)) + nmi(pi, ens.partitioning(1))) / 2.0;
  CHECK_THAT(ensemble_nmi(pi, ens), WithinAbs(expect, 1e-12));
  CHECK_THAT(nmi(pi, ens.partitioning(0)), WithinAbs(1.0, 1e-12));
}

TEST_CASE("agreement baselines") {
  Rng rng(23);
  for (int t = 0; t < 10; ++t) {
    const auto ens = oracle::random_ensemble(rng, 20 + rng.below(30), 3 + rng.below(5), 5);
    const BaselineStats st = nmi_baselines(ens);
    CHECK(st.best >= st.mean - 1e-12);
    CHECK(st.best_index < ens.size());
    // the best member really is the argmax of mean agreement
    double check_best = -1.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
      double mean_i = 0.0;
      for (std::size_t j = 0; j < ens.size(); ++j)
        if (j != i) mean_i += nmi(ens.partitioning(i), ens.partitioning(j));
      mean_i /= static_cast<double>(ens.size() - 1);
      check_best = std::max(check_best, mean_i);
    }
    CHECK_THAT(st.best, WithinAbs(check_best, 1e-12));
  }
  std::vector<Partitioning> two;
  two.emplace_back(std::vector<Label>{0, 0, 1}, 2);
  two.emplace_back(std::vector<Label>{0, 1, 0}, 2);
  const ClusterEnsemble pair(std::move(two));
  const BaselineStats st = nmi_baselines(pair);
  const double v = nmi(pair.partitioning(0), pair.partitioning(1));
  CHECK_THAT(st.mean, WithinAbs(v, 1e-12));
  CHECK_THAT(st.best, WithinAbs(v, 1e-12));
}

TEST_CASE("density baselines score members against the ensemble") {
  Rng rng(29);
  const auto ens = oracle::random_ensemble(rng, 30, 4, 5);
  const IncidenceMatrix h = build_incidence(ens);
  const BaselineStats st = density_baselines(h, ens);
  CHECK(st.best >= st.mean - 1e-12);
  CHECK_THAT(st.best,
             WithinAbs(partition_score(h, ens.partitioning(st.best_index)).score,
                       1e-12));
}
