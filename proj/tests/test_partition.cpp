#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "polarlab/partition.hpp"

using namespace polarlab;

TEST_CASE("partition canonical form and text format") {
  Partition p(4, {{3, 1}, {2, 0}});
  CHECK(p.blocks() == std::vector<std::vector<int>>{{0, 2}, {1, 3}});
  CHECK(p.str() == "0,2|1,3");
  CHECK(Partition::parse("0,2|1,3", 4) == p);
  CHECK(Partition::parse("3,1 | 2,0", 4) == p);

  CHECK_THROWS_AS(Partition(4, {{0, 1}, {1, 2, 3}}), NotAPartition);
  CHECK_THROWS_AS(Partition(4, {{0, 1}}), NotAPartition);
  CHECK_THROWS_AS(Partition::parse("0,1|2", 4), NotAPartition);
  CHECK_THROWS_AS(Partition::parse("0;1", 2), ParseError);

  CHECK(p.balanced());
  CHECK(p.block_size() == 2);
  CHECK_FALSE(Partition(3, {{0, 1}, {2}}).balanced());

  CHECK(p.block_index_of(2) == 0);
  CHECK(Partition::singletons(4).block_index_of(3) == 3);
  CHECK(Partition::whole(4).block_index_of(3) == 0);
}

TEST_CASE("meet is the common refinement") {
  Partition h(4, {{0, 2}, {1, 3}});
  CHECK(meet(h, Partition::singletons(4)) == Partition::singletons(4));
  CHECK(meet(h, Partition::whole(4)) == h);
  CHECK(meet(h, Partition(4, {{0, 1}, {2, 3}})) == Partition::singletons(4));
  CHECK_THROWS_AS(meet(h, Partition::whole(3)), PartitionMismatch);
}

TEST_CASE("uniform block distributions") {
  Partition h(4, {{0, 2}, {1, 3}});
  auto d = uniform_on_block(h, 0);
  CHECK(d == std::vector<double>{0.5, 0.0, 0.5, 0.0});
}

TEST_CASE("balanced partition enumeration counts") {
  CHECK(balanced_partitions(2).size() == 2);   // singletons, whole
  CHECK(balanced_partitions(4).size() == 5);   // 1 + 3 + 1
  CHECK(balanced_partitions(6).size() == 27);  // 1 + 15 + 10 + 1
}

TEST_CASE("block product step") {
  auto add4 = CayleyTable::add_mod(4);
  Partition cosets(4, {{0, 2}, {1, 3}});
  CHECK(star_step(add4, cosets) == cosets);
  CHECK_THROWS_AS(star_step(add4, Partition(4, {{0, 1}, {2, 3}})), NotAPartition);

  auto xor2 = CayleyTable::xor2();
  CHECK(star_step(xor2, Partition::singletons(2)) == Partition::singletons(2));
  CHECK(star_step(xor2, Partition::whole(2)) == Partition::whole(2));
}

TEST_CASE("stability and iterates") {
  auto add4 = CayleyTable::add_mod(4);
  Partition cosets(4, {{0, 2}, {1, 3}});
  auto it = stable_iterates(add4, cosets);
  REQUIRE(it.has_value());
  CHECK(it->transient == 0);
  CHECK(it->period == 1);
  CHECK(it->at(7) == cosets);

  CHECK_FALSE(is_stable(add4, Partition(4, {{0, 1}, {2, 3}})));
  CHECK(is_stable(CayleyTable::four_element_example(), Partition::whole(4)));

  // iterates keep the block size
  auto rd = CayleyTable::residue_defect_example();
  Partition h(4, {{0, 2}, {1, 3}});
  auto hi = stable_iterates(rd, h);
  REQUIRE(hi.has_value());
  for (const auto& p : hi->iterates) CHECK(p.block_size() == 2);
}

TEST_CASE("stable partition enumeration") {
  auto add4 = CayleyTable::add_mod(4);
  auto st = enumerate_stable_partitions(add4);
  std::set<Partition> got(st.begin(), st.end());
  std::set<Partition> expect{Partition::singletons(4), Partition(4, {{0, 2}, {1, 3}}),
                             Partition::whole(4)};
  CHECK(got == expect);

  auto stx = enumerate_stable_partitions(CayleyTable::xor2());
  CHECK(stx.size() == 2);

  auto stp = enumerate_stable_partitions(CayleyTable::projection(2));
  CHECK(std::find(stp.begin(), stp.end(), Partition::singletons(2)) != stp.end());
}

TEST_CASE("first residue by characterizing-property search") {
  auto add4 = CayleyTable::add_mod(4);
  Partition cosets(4, {{0, 2}, {1, 3}});
  CHECK(first_residue(add4, cosets) == cosets);

  auto xor2 = CayleyTable::xor2();
  CHECK(first_residue(xor2, Partition::whole(2)) == Partition::whole(2));
  CHECK(first_residue(xor2, Partition::singletons(2)) == Partition::singletons(2));

  // a genuinely finer residue
  auto rd = CayleyTable::residue_defect_example();
  CHECK(first_residue(rd, Partition(4, {{0, 2}, {1, 3}})) == Partition::singletons(4));

  CHECK_THROWS_AS(first_residue(CayleyTable::shift(2), Partition::whole(2)), Error);
}

TEST_CASE("residues refine, stay stable, and are their own residues") {
  std::vector<std::pair<CayleyTable, Partition>> fixtures;
  fixtures.emplace_back(CayleyTable::add_mod(4), Partition(4, {{0, 2}, {1, 3}}));
  fixtures.emplace_back(CayleyTable::add_mod(4), Partition::whole(4));
  fixtures.emplace_back(CayleyTable::residue_defect_example(), Partition(4, {{0, 2}, {1, 3}}));
  fixtures.emplace_back(inverse_op(CayleyTable::four_element_example()), Partition::whole(4));
  for (const auto& [op, h] : fixtures) {
    auto k = first_residue(op, h);
    CHECK(k.refines(h));
    CHECK(is_stable(op, k));
    CHECK(first_residue(op, k) == k);
  }
}

TEST_CASE("residue check across stable partitions") {
  for (std::size_t q = 2; q <= 5; ++q) CHECK(residue_check(CayleyTable::add_mod(q)));
  CHECK(residue_check(inverse_op(CayleyTable::four_element_example())));
  CHECK_FALSE(residue_check(CayleyTable::residue_defect_example()));
  CHECK_THROWS_AS(residue_check(CayleyTable::shift(2)), Error);
}

TEST_CASE("meet of stable partitions is stable") {
  for (const auto& op : {CayleyTable::add_mod(4), CayleyTable::add_mod(6),
                         inverse_op(CayleyTable::four_element_example())}) {
    auto st = enumerate_stable_partitions(op);
    for (const auto& a : st)
      for (const auto& b : st) CHECK(is_stable(op, meet(a, b)));
  }
}

TEST_CASE("strong ergodicity by reachability") {
  auto sx = is_strongly_ergodic(CayleyTable::xor2());
  CHECK(sx.strongly_ergodic);
  REQUIRE(sx.scon_estimate.has_value());
  CHECK(*sx.scon_estimate <= 2);

  // inverse of the zero-exponent example is strongly ergodic
  CHECK(is_strongly_ergodic(inverse_op(CayleyTable::four_element_example())).strongly_ergodic);

  // not ergodic short-circuits
  auto sh = is_strongly_ergodic(CayleyTable::shift(2));
  CHECK_FALSE(sh.strongly_ergodic);
  CHECK_FALSE(sh.scon_estimate.has_value());

  // ergodic with a residue defect is not strongly ergodic
  CHECK_FALSE(is_strongly_ergodic(CayleyTable::residue_defect_example()).strongly_ergodic);
}

TEST_CASE("reachability agrees with the residue diagnostic") {
  // exhaustive at size 2
  for (int bits = 0; bits < 16; ++bits) {
    CayleyTable op(2, {bits & 1, (bits >> 1) & 1, (bits >> 2) & 1, (bits >> 3) & 1});
    if (!is_uniformity_preserving(op) || !is_ergodic(op)) continue;
    CHECK(is_strongly_ergodic(op).strongly_ergodic == residue_check(op));
  }
  // seeded spot checks at sizes 3 and 4
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto op = CayleyTable::random_uniformity_preserving(seed, seed % 2 ? 3 : 4);
    if (!is_ergodic(op)) continue;
    CHECK(is_strongly_ergodic(op).strongly_ergodic == residue_check(op));
  }
}

TEST_CASE("quasigroup inverses are strongly ergodic") {
  for (std::size_t q = 2; q <= 5; ++q)
    CHECK(is_strongly_ergodic(inverse_op(CayleyTable::add_mod(q))).strongly_ergodic);
  auto klein = product_op({CayleyTable::xor2(), CayleyTable::xor2()});
  CHECK(is_strongly_ergodic(inverse_op(klein)).strongly_ergodic);
}

TEST_CASE("size caps") {
  CHECK_THROWS_AS(is_strongly_ergodic(CayleyTable::add_mod(9)), SizeCapExceeded);
}
