#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "polarlab/cayley.hpp"
#include "polarlab/classify.hpp"

using namespace polarlab;

namespace {

// All 16 binary operations on {0,1}.
std::vector<CayleyTable> all_size2_tables() {
  std::vector<CayleyTable> out;
  for (int bits = 0; bits < 16; ++bits)
    out.push_back(CayleyTable(2, {bits & 1, (bits >> 1) & 1, (bits >> 2) & 1, (bits >> 3) & 1}));
  return out;
}

// Independent irreducibility oracle: check every proper non-empty subset for
// invariance A * X = A.
bool irreducible_by_subsets(const CayleyTable& op) {
  const std::size_t n = op.size();
  for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    std::uint32_t image = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (!(mask & (1u << a))) continue;
      for (std::size_t b = 0; b < n; ++b) image |= 1u << op.apply(a, b);
    }
    if (image == mask) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("operation file parsing") {
  auto xor2 = parse_op("2\n0 1\n1 0\n");
  CHECK(xor2 == CayleyTable::xor2());

  auto four = parse_op("4\n3 3 3 3\n0 1 0 0\n1 0 1 1\n2 2 2 2\n");
  CHECK(four == CayleyTable::four_element_example());

  CHECK_THROWS_AS(parse_op("2\n0 2\n1 0\n"), ParseError);   // entry >= n
  CHECK_THROWS_AS(parse_op("2\n0 1\n1\n"), ParseError);     // ragged row
  CHECK_THROWS_AS(parse_op("x\n0 1\n1 0\n"), ParseError);   // bad header
  CHECK_THROWS_AS(parse_op(""), ParseError);
  CHECK_THROWS_AS(parse_op("2 2\n0 1\n1 0\n"), ParseError);

  // comments are ignored and round-trips hold
  auto with_comments = parse_op("# op\n3\n0 1 2\n# mid\n1 2 0\n2 0 1\n");
  CHECK(with_comments == CayleyTable::add_mod(3));
  CHECK(parse_op(format_op(with_comments)) == with_comments);
}

TEST_CASE("uniformity preservation is a per-column bijection test") {
  CHECK(is_uniformity_preserving(CayleyTable::xor2()));
  CHECK(is_uniformity_preserving(CayleyTable::four_element_example()));
  CHECK(is_uniformity_preserving(CayleyTable::projection(3)));
  CHECK(is_uniformity_preserving(CayleyTable::shift(4)));
  CHECK_FALSE(is_uniformity_preserving(CayleyTable::constant(2, 0)));

  // column multisets equal the full alphabet for every fixture
  for (const auto& op : {CayleyTable::add_mod(5), CayleyTable::four_element_example(),
                         CayleyTable::random_uniformity_preserving(7, 6)}) {
    REQUIRE(is_uniformity_preserving(op));
    for (std::size_t b = 0; b < op.size(); ++b) {
      std::set<int> col;
      for (std::size_t a = 0; a < op.size(); ++a) col.insert(op.apply(a, b));
      CHECK(col.size() == op.size());
    }
  }
}

TEST_CASE("inverse operation solves the column equations") {
  CHECK(inverse_op(CayleyTable::xor2()) == CayleyTable::xor2());

  // subtraction mod 3, checked against exhaustive column solving
  auto add3 = CayleyTable::add_mod(3);
  auto inv = inverse_op(add3);
  for (int x = 0; x < 3; ++x)
    for (int b = 0; b < 3; ++b) {
      int expected = -1;
      for (int a = 0; a < 3; ++a)
        if (add3.apply(a, b) == x) expected = a;
      CHECK(inv.apply(x, b) == expected);
      CHECK(inv.apply(x, b) == ((x - b) % 3 + 3) % 3);
    }

  CHECK_THROWS_AS(inverse_op(CayleyTable::constant(2, 0)), NotUniformityPreserving);

  // round trips on assorted uniformity-preserving tables
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto op = CayleyTable::random_uniformity_preserving(seed, 5);
    auto i = inverse_op(op);
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b) {
        CHECK(op.apply(i.apply(a, b), b) == a);
        CHECK(i.apply(op.apply(a, b), b) == a);
      }
    CHECK(inverse_op(i) == op);
  }
}

TEST_CASE("quasigroup test is the Latin square test") {
  CHECK(is_quasigroup(CayleyTable::add_mod(4)));
  CHECK_FALSE(is_quasigroup(CayleyTable::four_element_example()));
  CHECK_FALSE(is_quasigroup(CayleyTable::projection(2)));
}

TEST_CASE("irreducibility agrees with the exhaustive subset oracle") {
  CHECK_FALSE(is_irreducible(CayleyTable::projection(2)));
  CHECK(is_irreducible(CayleyTable::xor2()));
  CHECK(is_irreducible(CayleyTable::four_element_example()));

  auto inv = invariant_subset(CayleyTable::projection(2));
  REQUIRE(inv.has_value());
  CHECK(inv->size() == 1);

  for (const auto& op : all_size2_tables()) CHECK(is_irreducible(op) == irreducible_by_subsets(op));
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SplitMix64 g(seed);
    std::vector<int> t(16);
    for (auto& v : t) v = static_cast<int>(g.next_below(4));
    CayleyTable op(4, t);
    CHECK(is_irreducible(op) == irreducible_by_subsets(op));
  }
}

TEST_CASE("ergodicity detects cyclic structure with witnesses") {
  CHECK(is_ergodic(CayleyTable::xor2()));  // self loop at 0

  auto rep = ergodicity(CayleyTable::shift(2));
  CHECK(rep.irreducible);
  CHECK_FALSE(rep.ergodic);
  CHECK(rep.period == 2);
  REQUIRE(rep.cyclic_classes.has_value());
  CHECK(*rep.cyclic_classes == std::vector<std::vector<int>>{{0}, {1}});

  auto rep3 = ergodicity(CayleyTable::shift(3));
  CHECK(rep3.period == 3);
  REQUIRE(rep3.cyclic_classes.has_value());
  // classes advance under right multiplication
  for (std::size_t i = 0; i < 3; ++i)
    for (int x : (*rep3.cyclic_classes)[i])
      for (int b = 0; b < 3; ++b) {
        int y = CayleyTable::shift(3).apply(x, b);
        const auto& next = (*rep3.cyclic_classes)[(i + 1) % 3];
        CHECK(std::find(next.begin(), next.end(), y) != next.end());
      }

  CHECK_FALSE(is_ergodic(CayleyTable::projection(2)));
}

TEST_CASE("product operations use the mixed-radix encoding") {
  auto klein = product_op({CayleyTable::xor2(), CayleyTable::xor2()});
  CHECK(klein.size() == 4);
  // (a1,a2)*(b1,b2) = (a1^b1, a2^b2) with index 2*x1+x2
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      CHECK(klein.apply(a, b) == ((a ^ b) & 3));

  auto mixed = product_op({CayleyTable::xor2(), CayleyTable::add_mod(3)});
  CHECK(mixed.size() == 6);
  // user 1 most significant: index = 3*x1 + x2
  CHECK(mixed.apply(4, 5) == 3 * (1 ^ 1) + (1 + 2) % 3);

  // inverse of product = product of inverses
  auto a = CayleyTable::random_uniformity_preserving(11, 3);
  auto b = CayleyTable::random_uniformity_preserving(12, 4);
  CHECK(inverse_op(product_op({a, b})) == product_op({inverse_op(a), inverse_op(b)}));

  // caps
  CHECK_THROWS_AS(product_op({CayleyTable::add_mod(5), CayleyTable::add_mod(5)}),
                  SizeCapExceeded);

  // products preserve uniformity preservation and quasigroup-ness
  auto q1 = CayleyTable::add_mod(2);
  auto q2 = CayleyTable::add_mod(4);
  CHECK(is_quasigroup(product_op({q1, q2})));
  auto up = CayleyTable::four_element_example();
  CHECK(is_uniformity_preserving(product_op({q1, up})));
  CHECK_FALSE(is_quasigroup(product_op({q1, up})));
}

TEST_CASE("zero-exponent predicate") {
  CHECK(zero_exponent_predicate(CayleyTable::four_element_example()));
  CHECK_FALSE(zero_exponent_predicate(CayleyTable::xor2()));
  // never true for a quasigroup: rows are injective
  for (std::size_t q = 2; q <= 5; ++q) CHECK_FALSE(zero_exponent_predicate(CayleyTable::add_mod(q)));
}

TEST_CASE("classification fixtures") {
  auto cx = classify(CayleyTable::xor2());
  CHECK(cx.uniformity_preserving);
  CHECK(cx.irreducible);
  CHECK(cx.ergodic);
  CHECK(cx.quasigroup);
  CHECK(cx.inverse_strongly_ergodic);
  CHECK(cx.polarizing);
  CHECK_FALSE(cx.zero_exponent_condition);

  auto c4 = classify(CayleyTable::four_element_example());
  CHECK(c4.uniformity_preserving);
  CHECK(c4.polarizing);
  CHECK(c4.zero_exponent_condition);
  CHECK_FALSE(c4.quasigroup);

  auto cp = classify(CayleyTable::projection(2));
  CHECK_FALSE(cp.polarizing);
  CHECK(cp.invariant_set.has_value());

  auto cc = classify(CayleyTable::constant(2, 0));
  CHECK_FALSE(cc.uniformity_preserving);
  CHECK_FALSE(cc.polarizing);

  auto cs = classify(CayleyTable::shift(2));
  CHECK_FALSE(cs.polarizing);
  CHECK(cs.cyclic_classes.has_value());

  for (std::size_t q = 2; q <= 5; ++q) {
    auto c = classify(CayleyTable::add_mod(q));
    CHECK(c.quasigroup);
    CHECK(c.polarizing);
  }
}

TEST_CASE("size-2 exhaustive classification consistency") {
  for (const auto& op : all_size2_tables()) {
    auto c = classify(op);
    if (c.quasigroup) CHECK(c.polarizing);
    CHECK_FALSE((c.quasigroup && c.zero_exponent_condition));
    CHECK(c.polarizing == c.quasigroup);  // holds at size 2
    if (c.ergodic) CHECK(c.irreducible);
    if (c.inverse_strongly_ergodic) CHECK(is_ergodic(inverse_op(op)));
  }
}
