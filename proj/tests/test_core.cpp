#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <vector>

#include "eac/core.hpp"
#include "eac/io.hpp"
#include "eac/metrics.hpp"
#include "eac/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace eac;

TEST_CASE("partition_from_labels compacts by first occurrence") {
  const auto pi = partition_from_labels(std::vector<int>{5, 2, 5, 9});
  CHECK(pi.cluster_count() == 3);
  CHECK(pi.labels() == std::vector<Label>{0, 1, 0, 2});
}

TEST_CASE("partitioning validation") {
  CHECK_THROWS_AS(Partitioning({0, 0, 2}, 3), std::invalid_argument);  // 1 empty
  CHECK_THROWS_AS(Partitioning({0, 3}, 2), std::invalid_argument);     // out of range
  CHECK_THROWS_AS(Partitioning({}, 1), std::invalid_argument);
  const Partitioning pi({1, 0, 1}, 2);
  CHECK(pi.size() == 3);
  CHECK(pi.cluster_sizes() == std::vector<std::size_t>{1, 2});
  CHECK(pi.members()[1] == std::vector<std::uint32_t>{0, 2});
}

TEST_CASE("ensemble requires consistent item counts") {
  std::vector<Partitioning> parts;
  parts.emplace_back(std::vector<Label>{0, 1}, 2);
  parts.emplace_back(std::vector<Label>{0, 1, 1}, 2);
  CHECK_THROWS_AS(ClusterEnsemble(std::move(parts)), std::invalid_argument);
}

TEST_CASE("incidence matrix layout on the disagreeing pair") {
  const auto ens = fixtures::tri_ensemble();
  const IncidenceMatrix h = build_incidence(ens);
  CHECK(h.items() == 3);
  CHECK(h.partitionings() == 2);
  CHECK(h.columns() == 4);
  CHECK(h.block_offsets() == std::vector<std::uint32_t>{0, 2, 4});

  CHECK(h.column_size(0) == 2);  // {0,1}
  CHECK(h.column_size(1) == 1);  // {2}
  CHECK(h.column_size(2) == 2);  // {0,2}
  CHECK(h.column_size(3) == 1);  // {1}
  CHECK(h.column_owner(0) == 0);
  CHECK(h.column_owner(3) == 1);

  const auto r0 = h.row_columns(0);
  CHECK(std::vector<std::uint32_t>(r0.begin(), r0.end()) ==
        std::vector<std::uint32_t>{0, 2});
  const auto r2 = h.row_columns(2);
  CHECK(std::vector<std::uint32_t>(r2.begin(), r2.end()) ==
        std::vector<std::uint32_t>{1, 2});
  const auto c2 = h.column_items(2);
  CHECK(std::vector<std::uint32_t>(c2.begin(), c2.end()) ==
        std::vector<std::uint32_t>{0, 2});
}

TEST_CASE("incidence row and column views agree on random ensembles") {
  Rng rng(41);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 5 + rng.below(40);
    const auto ens = oracle::random_ensemble(rng, n, 2 + rng.below(5), 6);
    const IncidenceMatrix h = build_incidence(ens);
    CHECK(h.columns() == ens.total_clusters());
    std::size_t total = 0;
    for (std::size_t f = 0; f < h.columns(); ++f) total += h.column_size(f);
    CHECK(total == n * ens.size());  // exactly one 1 per row per partitioning
    for (std::size_t i = 0; i < n; ++i) {
      const auto cols = h.row_columns(i);
      REQUIRE(cols.size() == ens.size());
      for (std::size_t j = 0; j < cols.size(); ++j) {
        CHECK(h.column_owner(cols[j]) == j);
        const auto items = h.column_items(cols[j]);
        CHECK(std::binary_search(items.begin(), items.end(),
                                 static_cast<std::uint32_t>(i)));
      }
    }
  }
}

TEST_CASE("label and ensemble files round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "eac_io_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  // The loader compacts labels by first occurrence, so round trips preserve
  // the partition structure, not the literal label values.
  Rng rng(7);
  const auto pi = oracle::random_partitioning(rng, 37, 5);
  save_labels(dir / "a.labels", pi);
  const auto back = load_labels(dir / "a.labels");
  CHECK(back.cluster_count() == pi.cluster_count());
  CHECK(nmi(back, pi) == 1.0);

  const auto ens = oracle::random_ensemble(rng, 23, 4, 5);
  save_ensemble(dir / "ens", ens);
  const auto ens2 = load_ensemble(dir / "ens");
  REQUIRE(ens2.size() == ens.size());
  for (std::size_t j = 0; j < ens.size(); ++j) {
    CHECK(ens2.partitioning(j).cluster_count() == ens.partitioning(j).cluster_count());
    CHECK(nmi(ens2.partitioning(j), ens.partitioning(j)) == 1.0);
  }

  std::filesystem::remove_all(dir);
}

TEST_CASE("label loader rejects junk") {
  const auto dir = std::filesystem::temp_directory_path() / "eac_io_junk";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "bad.labels");
    out << "1\nx\n";
  }
  CHECK_THROWS_AS(load_labels(dir / "bad.labels"), std::runtime_error);
  CHECK_THROWS_AS(load_labels(dir / "missing.labels"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset validation") {
  Dataset ds;
  ds.name = "x";
  ds.n = 2;
  ds.f = 1;
  ds.features = {1.0, 2.0, 3.0};  // wrong size
  CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
  ds.features = {1.0, 2.0};
  CHECK_NOTHROW(ds.validate());
}
