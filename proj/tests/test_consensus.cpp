#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "eac/consensus.hpp"
#include "eac/metrics.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace eac;

namespace {

ConsensusRequest request(Algorithm algo, std::uint32_t k_out,
                         std::uint64_t seed = 7) {
  ConsensusRequest req;
  req.algorithm = algo;
  req.k_out = k_out;
  req.seed = seed;
  return req;
}

ConsensusRequest hier_request(Linkage linkage, std::uint32_t k_out,
                              CaKind ca = CaKind::raw) {
  ConsensusRequest req = request(Algorithm::hier, k_out);
  req.options.linkage = linkage;
  req.options.ca = ca;
  return req;
}

std::vector<ConsensusRequest> all_requests(std::uint32_t k_out,
                                           std::uint64_t seed) {
  std::vector<ConsensusRequest> reqs;
  for (Algorithm a : {Algorithm::eac_km, Algorithm::h_km, Algorithm::sec,
                      Algorithm::ecc, Algorithm::mcla, Algorithm::cspa})
    reqs.push_back(request(a, k_out, seed));
  for (Linkage l : {Linkage::single, Linkage::average, Linkage::maximum})
    for (CaKind ca : {CaKind::raw, CaKind::enhanced}) {
      ConsensusRequest req = request(Algorithm::hier, k_out, seed);
      req.options.linkage = l;
      req.options.ca = ca;
      reqs.push_back(req);
    }
  return reqs;
}

double score_of(const ClusterEnsemble& ens, const Partitioning& pi) {
  return partition_score(build_incidence(ens), pi).score;
}

}  // namespace

TEST_CASE("name parsing and labels") {
  CHECK(parse_algorithm("eac_km") == Algorithm::eac_km);
  CHECK(parse_algorithm("hier") == Algorithm::hier);
  CHECK_THROWS_AS(parse_algorithm("nope"), std::invalid_argument);
  CHECK(parse_linkage("SL") == Linkage::single);
  CHECK(parse_linkage("average") == Linkage::average);
  CHECK_THROWS_AS(parse_linkage("fancy"), std::invalid_argument);
  CHECK(parse_ca_kind("enhanced") == CaKind::enhanced);
  CHECK(algorithm_label(request(Algorithm::sec, 3)) == "sec");
  CHECK(algorithm_label(hier_request(Linkage::single, 2)) == "hier-SL-raw");
  CHECK(algorithm_label(hier_request(Linkage::maximum, 2, CaKind::enhanced)) ==
        "hier-ML-enhanced");
}

TEST_CASE("size-normalized transform on fixed ensembles") {
  const SizeNormalization t0 = sec_transform(build_incidence(fixtures::pair_ensemble()));
  CHECK(t0.weights == std::vector<double>{4.0, 4.0, 4.0, 4.0});
  CHECK(t0.scale[0] == 0.25);
  const SizeNormalization t1 = sec_transform(build_incidence(fixtures::tri_ensemble()));
  CHECK(t1.weights == std::vector<double>{4.0, 3.0, 3.0});
}

TEST_CASE("all algorithms recover the duplicated pair split") {
  const ClusterEnsemble ens = fixtures::pair_ensemble();
  const Partitioning truth({0, 0, 1, 1}, 2);
  for (const auto& req : all_requests(2, 11)) {
    INFO(algorithm_label(req));
    const FitResult fit = run_consensus(ens, req);
    CHECK(nmi(fit.partitioning, truth) == 1.0);
  }
  const FitResult km = run_consensus(ens, request(Algorithm::eac_km, 2));
  CHECK(score_of(ens, km.partitioning) == 1.0);
}

TEST_CASE("agglomeration breaks similarity ties toward the smallest pair") {
  // A(0,1) = A(0,2) = 0.5, A(1,2) = 0: the tie merges (0,1), never (0,2).
  const ClusterEnsemble ens = fixtures::tri_ensemble();
  for (Linkage l : {Linkage::single, Linkage::average, Linkage::maximum}) {
    const FitResult fit = run_consensus(ens, hier_request(l, 2));
    CHECK(fit.partitioning.label(0) == fit.partitioning.label(1));
    CHECK(fit.partitioning.label(0) != fit.partitioning.label(2));
    CHECK(fit.iterations == 1);
  }
}

TEST_CASE("graph-cut consensus on the pair ensemble") {
  const ClusterEnsemble ens = fixtures::pair_ensemble();
  const Partitioning truth({0, 0, 1, 1}, 2);
  const FitResult cspa = run_consensus(ens, request(Algorithm::cspa, 2));
  CHECK(nmi(cspa.partitioning, truth) == 1.0);
  CHECK(cspa.loss == 0.0);  // no co-association crosses the cut
  const FitResult mcla = run_consensus(ens, request(Algorithm::mcla, 2));
  CHECK(nmi(mcla.partitioning, truth) == 1.0);
  CHECK(mcla.loss == 0.0);
}

TEST_CASE("requested cluster counts are honored") {
  Rng rng(31);
  const ClusterEnsemble ens = oracle::random_ensemble(rng, 24, 4, 5);
  for (const auto& req : all_requests(4, 3)) {
    if (req.algorithm == Algorithm::mcla) continue;  // may return fewer
    INFO(algorithm_label(req));
    const FitResult fit = run_consensus(ens, req);
    CHECK(fit.partitioning.cluster_count() == 4);
    CHECK(fit.partitioning.size() == 24);
  }
  const FitResult mcla = run_consensus(ens, request(Algorithm::mcla, 4));
  CHECK(mcla.partitioning.cluster_count() <= 4);
}

TEST_CASE("identical reruns for every algorithm") {
  Rng rng(33);
  const ClusterEnsemble ens = oracle::random_ensemble(rng, 30, 5, 6);
  for (const auto& req : all_requests(3, 19)) {
    INFO(algorithm_label(req));
    const FitResult a = run_consensus(ens, req);
    const FitResult b = run_consensus(ens, req);
    CHECK(a.partitioning.labels() == b.partitioning.labels());
    CHECK(a.loss == b.loss);
  }
}

TEST_CASE("request validation") {
  const ClusterEnsemble ens = fixtures::pair_ensemble();
  CHECK_THROWS_AS(run_consensus(ens, request(Algorithm::eac_km, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_consensus(ens, request(Algorithm::hier, 5)),
                  std::invalid_argument);
}

TEST_CASE("meta-clustering rejects more parts than base clusters") {
  // n = 6 items but only d = 5 base clusters: k_out = 6 passes the item check
  // yet cannot seed 6 metas.
  std::vector<Partitioning> parts;
  parts.emplace_back(std::vector<Label>{0, 0, 0, 1, 1, 1}, 2);
  parts.emplace_back(std::vector<Label>{0, 0, 1, 1, 2, 2}, 3);
  const ClusterEnsemble ens(std::move(parts));
  CHECK_THROWS_AS(run_consensus(ens, request(Algorithm::mcla, 6)),
                  std::invalid_argument);
}

TEST_CASE("matrix cap guards the quadratic algorithms only") {
  const ClusterEnsemble ens = fixtures::pair_ensemble();  // n = 4
  ConsensusRequest hier = hier_request(Linkage::average, 2);
  hier.options.matrix_cap = 3;
  CHECK_THROWS_AS(run_consensus(ens, hier), std::invalid_argument);
  ConsensusRequest cspa = request(Algorithm::cspa, 2);
  cspa.options.matrix_cap = 3;
  CHECK_THROWS_AS(run_consensus(ens, cspa), std::invalid_argument);
  ConsensusRequest km = request(Algorithm::eac_km, 2);
  km.options.matrix_cap = 3;
  CHECK(run_consensus(ens, km).converged);
}

TEST_CASE("shared runner reuses one incidence matrix") {
  Rng rng(35);
  const ClusterEnsemble ens = oracle::random_ensemble(rng, 20, 3, 4);
  ConsensusRunner runner(ens);
  const FitResult direct = run_consensus(ens, request(Algorithm::ecc, 3));
  const FitResult shared = runner.run(request(Algorithm::ecc, 3));
  CHECK(direct.partitioning.labels() == shared.partitioning.labels());
  CHECK(runner.incidence().items() == 20);
}

TEST_CASE("well-separated blobs are recovered end to end") {
  Rng rng(37);
  const Dataset ds = oracle::gaussian_blobs(rng, 60, 3, 3);
  const ClusterEnsemble ens = generate_base_clusterings(ds, 8, 5);
  const Partitioning truth(*ds.ground_truth, 3);
  // Balanced graph cuts may clip a few boundary points, so the floor sits a
  // little below the clean-recovery mark.
  for (const auto& req : all_requests(3, 23)) {
    INFO(algorithm_label(req));
    const FitResult fit = run_consensus(ens, req);
    CHECK(nmi(fit.partitioning, truth) >= 0.75);
  }
}

TEST_CASE("flat consensus scores at least as well as agglomeration on average") {
  Rng rng(41);
  int wins = 0, trials = 8;
  for (int t = 0; t < trials; ++t) {
    const ClusterEnsemble ens = oracle::random_ensemble(rng, 36, 5, 6);
    ConsensusRunner runner(ens);
    const double km = score_of(
        ens, runner.run(request(Algorithm::eac_km, 3, 100 + t)).partitioning);
    const double hier = score_of(
        ens, runner.run(hier_request(Linkage::average, 3)).partitioning);
    if (km >= hier - 1e-12) ++wins;
  }
  CHECK(wins >= 5);
}
