#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "polarlab/polarize.hpp"

using namespace polarlab;
using Catch::Approx;

namespace {

// Scalar erasure-parameter recursion: the independent oracle for erasure
// channels combined with the two-element group.
std::vector<double> bec_leaf_params(double eps, std::size_t depth) {
  std::vector<double> cur{eps};
  for (std::size_t level = 0; level < depth; ++level) {
    std::vector<double> next;
    next.reserve(cur.size() * 2);
    for (double e : cur) {
      next.push_back(2 * e - e * e);
      next.push_back(e * e);
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

TEST_CASE("exhaustive runs preserve the capacity mean and match the oracle") {
  PolarConfig cfg;
  cfg.depth = 6;
  cfg.delta = 0.05;
  auto res = polarization_run(bec(0.5), CayleyTable::xor2(), cfg);
  REQUIRE(res.records.size() == 64);
  CHECK(res.summary.mean_info == Approx(0.5).margin(1e-6));
  CHECK_FALSE(res.summary.partial);

  auto oracle = bec_leaf_params(0.5, 6);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(res.records[i].info == Approx(1.0 - oracle[i]).margin(1e-9));
    CHECK(res.records[i].z == Approx(oracle[i]).margin(1e-9));
  }

  std::size_t hist_total = 0;
  for (auto c : res.summary.histogram) hist_total += c;
  CHECK(hist_total == 64);

  // the capacity mean is preserved at every depth of the tree, not just at
  // the leaves
  std::vector<double> level_sum(7, 0.0);
  for_each_transform_node(bec(0.5), CayleyTable::xor2(), 6, {},
                          [&](const SignSeq& s, const Channel& node) {
                            level_sum[s.size()] += mutual_info(node);
                          });
  for (std::size_t d = 0; d <= 6; ++d)
    CHECK(level_sum[d] / std::pow(2.0, double(d)) == Approx(0.5).margin(1e-6));
}

TEST_CASE("exhaustive runs are identical across thread counts") {
  PolarConfig cfg;
  cfg.depth = 5;
  cfg.delta = 0.1;
  auto run = [&](unsigned threads) {
    PolarConfig c = cfg;
    c.threads = threads;
    return polarization_run(bsc(0.2), CayleyTable::xor2(), c);
  };
  auto r1 = run(1);
  auto r4 = run(4);
  REQUIRE(r1.records.size() == r4.records.size());
  for (std::size_t i = 0; i < r1.records.size(); ++i) {
    CHECK(r1.records[i].seq == r4.records[i].seq);
    CHECK(r1.records[i].info == r4.records[i].info);  // bitwise
    CHECK(r1.records[i].z == r4.records[i].z);
  }
}

TEST_CASE("monte-carlo paths are seed-deterministic and thread-independent") {
  PolarConfig cfg;
  cfg.mode = RunMode::MonteCarlo;
  cfg.depth = 6;
  cfg.samples = 40;
  cfg.seed = 1234;
  cfg.delta = 0.05;
  auto a = polarization_run(bec(0.4), CayleyTable::xor2(), cfg);
  cfg.threads = 3;
  auto b = polarization_run(bec(0.4), CayleyTable::xor2(), cfg);
  REQUIRE(a.records.size() == 40);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(a.records[i].seq == b.records[i].seq);
    CHECK(a.records[i].info == b.records[i].info);
  }
  cfg.seed = 1235;
  auto c = polarization_run(bec(0.4), CayleyTable::xor2(), cfg);
  bool any_diff = false;
  for (std::size_t i = 0; i < 40; ++i) any_diff = any_diff || c.records[i].seq != a.records[i].seq;
  CHECK(any_diff);
}

TEST_CASE("budget overruns flush the completed leaves as a partial result") {
  Channel w(2, 2, {0.8, 0.6, 0.2, 0.4});
  PolarConfig cfg;
  cfg.depth = 3;
  cfg.delta = 0.05;
  cfg.budget.max_outputs = 60;
  auto res = polarization_run(w, CayleyTable::xor2(), cfg);
  CHECK(res.summary.partial);
  REQUIRE(res.records.size() == 2);
  CHECK(sign_string(res.records[0].seq) == "---");
  CHECK(sign_string(res.records[1].seq) == "--+");

  // nothing completed at all: the error propagates instead
  cfg.budget.max_outputs = 2;
  CHECK_THROWS_AS(polarization_run(w, CayleyTable::xor2(), cfg), BudgetExceeded);
}

TEST_CASE("the process refuses non-uniformity-preserving operations by default") {
  PolarConfig cfg;
  cfg.depth = 2;
  CHECK_THROWS_AS(polarization_run(perfect_channel(2), CayleyTable::constant(2, 0), cfg),
                  NotUniformityPreserving);
  cfg.allow_non_uniformity_preserving = true;
  auto res = polarization_run(perfect_channel(2), CayleyTable::constant(2, 0), cfg);
  CHECK(res.summary.mean_info < mutual_info(perfect_channel(2)) - 1e-6);
}

TEST_CASE("non-easy families stay uncertified at every leaf") {
  std::vector<std::vector<int>> classes{{0}, {1}};
  auto w = cyclic_channel(classes, 0, 0.35);
  PolarConfig cfg;
  cfg.depth = 4;
  cfg.delta = 0.05;
  auto res = polarization_run(w, CayleyTable::shift(2), cfg);
  CHECK(res.summary.fraction_certified == 0.0);
  for (const auto& r : res.records) {
    CHECK(r.cert.verdict != Verdict::Certified);
    CHECK(r.info == Approx(mutual_info(w)).margin(1e-9));
  }
}

TEST_CASE("single-step overlap identities and bounds") {
  auto rep = verify_bhatt_lemmas(bec(0.3), CayleyTable::xor2(), 2);
  CHECK(rep.ok);
  // plus identity for the two-element group collapses to squaring
  auto plus = plus_transform(bec(0.3), CayleyTable::xor2());
  CHECK(bhattacharyya_pair(plus, 0, 1) == Approx(0.09).margin(1e-9));

  auto perfect = verify_bhatt_lemmas(perfect_channel(3), CayleyTable::add_mod(3), 2);
  CHECK(perfect.ok);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto op = CayleyTable::random_uniformity_preserving(seed, 3);
    auto w = random_channel(seed + 10, 3, 2);
    TransformOptions opts;
    opts.max_outputs = 600000;
    auto r = verify_bhatt_lemmas(w, op, 3, opts);
    CHECK(r.ok);
    CHECK(r.sequences_checked == 14);
  }

  CHECK_THROWS_AS(verify_bhatt_lemmas(bec(0.5), CayleyTable::xor2(), 5), SizeCapExceeded);
}

TEST_CASE("capacity-overlap inequality suite") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto w = random_channel(seed, 2 + seed % 4, 2 + seed % 5);
    CHECK(verify_capacity_bhatt_inequalities(w).ok);
  }
  CHECK(verify_capacity_bhatt_inequalities(perfect_channel(4)).ok);
  CHECK(verify_capacity_bhatt_inequalities(useless_channel(3, 2)).ok);
}

TEST_CASE("zero-exponent operations keep the worst overlap large") {
  auto op = CayleyTable::four_element_example();
  REQUIRE(zero_exponent_predicate(op));
  auto w = erasure_channel(4, 0.45);
  double z0 = bhattacharyya(w).z_max;
  REQUIRE(z0 > 0.0);
  TransformOptions opts;
  opts.max_outputs = 500000;
  for_each_transform_node(w, op, 3, opts, [&](const SignSeq& s, const Channel& node) {
    double bound = z0 / std::pow(4.0, static_cast<double>(s.size()));
    CHECK(bhattacharyya(node).z_max >= bound - 1e-12);
  });
}

TEST_CASE("leaves settle on intermediate coset levels under mod-4 addition") {
  // the coset of the input is always revealed; the full symbol with
  // probability 1/2
  std::vector<double> lik(6 * 4, 0.0);
  for (int x = 0; x < 4; ++x) {
    lik[x * 4 + x] = 0.5;
    lik[(4 + (x % 2)) * 4 + x] = 0.5;
  }
  Channel w(4, 6, lik);
  auto add4 = CayleyTable::add_mod(4);
  REQUIRE(mutual_info(w) == Approx(1.5).margin(1e-12));

  const double delta = 0.05;
  Partition cosets(4, {{0, 2}, {1, 3}});
  auto categorize = [&](std::size_t depth) {
    std::size_t low = 0, coset = 0, high = 0, leaves = 0;
    for_each_transform_node(w, add4, depth, {}, [&](const SignSeq& s, const Channel& node) {
      if (s.size() != depth) return;
      ++leaves;
      double info = mutual_info(node);
      if (info < delta) ++low;
      else if (info > 2.0 - delta) ++high;
      else if (std::abs(info - 1.0) < delta &&
               std::abs(mutual_info(project_channel(node, cosets)) - 1.0) < delta)
        ++coset;
    });
    return std::tuple{low, coset, high, leaves};
  };

  auto [low, coset, high, leaves] = categorize(8);
  CHECK(low == 0);  // the coset bit is never lost
  CHECK(coset > 0);
  CHECK(high > 0);

  // the level scan counts exactly the categorized leaves
  auto scan = stable_level_scan(w, add4, 8, delta);
  CHECK(scan.fraction_all_projections ==
        Approx(double(low + coset + high) / double(leaves)));
  CHECK(scan.fraction_witness_only == scan.fraction_all_projections);

  auto [low4, coset4, high4, leaves4] = categorize(4);
  auto scan4 = stable_level_scan(w, add4, 4, delta);
  CHECK(scan4.fraction_all_projections ==
        Approx(double(low4 + coset4 + high4) / double(leaves4)));
  CHECK(scan.fraction_all_projections >= scan4.fraction_all_projections);
}

TEST_CASE("stable-partition level scan") {
  auto scan = stable_level_scan(perfect_channel(2), CayleyTable::xor2(), 2, 0.01);
  CHECK(scan.fraction_all_projections == Approx(1.0));
  CHECK(scan.fraction_witness_only == Approx(1.0));

  auto scan_useless = stable_level_scan(useless_channel(2, 2), CayleyTable::xor2(), 3, 0.01);
  CHECK(scan_useless.fraction_all_projections == Approx(1.0));

  // erasure input at depth 8: agreement with the scalar recursion
  std::size_t depth = 8;
  double delta = 0.05;
  auto scan_bec = stable_level_scan(bec(0.5), CayleyTable::xor2(), depth, delta);
  auto params = bec_leaf_params(0.5, depth);
  std::size_t oracle_hits = 0;
  for (double e : params) oracle_hits += (e < delta || e > 1.0 - delta);
  CHECK(scan_bec.fraction_all_projections ==
        Approx(static_cast<double>(oracle_hits) / static_cast<double>(params.size())));
  CHECK(scan_bec.fraction_witness_only == scan_bec.fraction_all_projections);
}
