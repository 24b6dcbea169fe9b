#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "polarlab/common.hpp"
#include "polarlab/rng.hpp"

namespace polarlab {

// A binary operation on {0..n-1} given by its full product table,
// table[a][b] = a*b. Immutable after construction.
class CayleyTable {
 public:
  CayleyTable(std::size_t n, std::vector<int> flat) : n_(n), flat_(std::move(flat)) {
    if (n_ < 2 || n_ > kMaxProductSize)
      throw SizeCapExceeded("operation size " + std::to_string(n_) + " outside [2, " +
                            std::to_string(kMaxProductSize) + "]");
    if (flat_.size() != n_ * n_) throw ParseError("table shape does not match size");
    for (int v : flat_)
      if (v < 0 || static_cast<std::size_t>(v) >= n_)
        throw ParseError("table entry " + std::to_string(v) + " out of range for size " +
                         std::to_string(n_));
  }

  std::size_t size() const { return n_; }
  int apply(int a, int b) const { return flat_[static_cast<std::size_t>(a) * n_ + b]; }

  bool operator==(const CayleyTable& o) const = default;

  static CayleyTable xor2() { return CayleyTable(2, {0, 1, 1, 0}); }

  static CayleyTable add_mod(std::size_t q) {
    std::vector<int> t(q * q);
    for (std::size_t a = 0; a < q; ++a)
      for (std::size_t b = 0; b < q; ++b) t[a * q + b] = static_cast<int>((a + b) % q);
    return CayleyTable(q, std::move(t));
  }

  // a*b = a
  static CayleyTable projection(std::size_t n) {
    std::vector<int> t(n * n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) t[a * n + b] = static_cast<int>(a);
    return CayleyTable(n, std::move(t));
  }

  // a*b = c
  static CayleyTable constant(std::size_t n, int c) {
    return CayleyTable(n, std::vector<int>(n * n, c));
  }

  // a*b = a+1 mod n
  static CayleyTable shift(std::size_t n) {
    std::vector<int> t(n * n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) t[a * n + b] = static_cast<int>((a + 1) % n);
    return CayleyTable(n, std::move(t));
  }

  // The 4-element table whose rows 0 and 3 are constant; polarizing but far
  // from a quasigroup. Appears throughout the tests.
  static CayleyTable four_element_example() {
    return CayleyTable(4, {3, 3, 3, 3, 0, 1, 0, 0, 1, 0, 1, 1, 2, 2, 2, 2});
  }

  // a*b = a + f(b) mod 4 with f = (1,0,1,0): ergodic and uniformity
  // preserving, but the coset pair {{0,2},{1,3}} has a strictly finer
  // residue, so the operation is not strongly ergodic.
  static CayleyTable residue_defect_example() {
    std::vector<int> t(16);
    auto f = [](int b) { return (b % 2 == 0) ? 1 : 0; };
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) t[a * 4 + b] = (a + f(b)) % 4;
    return CayleyTable(4, std::move(t));
  }

  // Column maps are independent seeded random permutations, so the result is
  // always uniformity preserving.
  static CayleyTable random_uniformity_preserving(std::uint64_t seed, std::size_t n) {
    SplitMix64 g(derive_stream(seed, 0x6f70'72616e64ULL));
    std::vector<int> t(n * n);
    std::vector<int> perm(n);
    for (std::size_t b = 0; b < n; ++b) {
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[g.next_below(i + 1)]);
      for (std::size_t a = 0; a < n; ++a) t[a * n + b] = perm[a];
    }
    return CayleyTable(n, std::move(t));
  }

 private:
  std::size_t n_;
  std::vector<int> flat_;  // row-major
};

// --- classification predicates -------------------------------------------

// For each fixed b, the map a -> a*b must be a bijection.
inline bool is_uniformity_preserving(const CayleyTable& op) {
  const std::size_t n = op.size();
  std::vector<bool> seen(n);
  for (std::size_t b = 0; b < n; ++b) {
    std::fill(seen.begin(), seen.end(), false);
    for (std::size_t a = 0; a < n; ++a) {
      int v = op.apply(static_cast<int>(a), static_cast<int>(b));
      if (seen[v]) return false;
      seen[v] = true;
    }
  }
  return true;
}

// The unique operation with (x /* b) * b = x, obtained by inverting each
// column map.
inline CayleyTable inverse_op(const CayleyTable& op) {
  if (!is_uniformity_preserving(op))
    throw NotUniformityPreserving("inverse requires a uniformity preserving operation");
  const std::size_t n = op.size();
  std::vector<int> t(n * n);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t a = 0; a < n; ++a)
      t[static_cast<std::size_t>(op.apply(a, b)) * n + b] = static_cast<int>(a);
  return CayleyTable(n, std::move(t));
}

// Latin square test.
inline bool is_quasigroup(const CayleyTable& op) {
  if (!is_uniformity_preserving(op)) return false;
  const std::size_t n = op.size();
  std::vector<bool> seen(n);
  for (std::size_t a = 0; a < n; ++a) {
    std::fill(seen.begin(), seen.end(), false);
    for (std::size_t b = 0; b < n; ++b) {
      int v = op.apply(static_cast<int>(a), static_cast<int>(b));
      if (seen[v]) return false;
      seen[v] = true;
    }
  }
  return true;
}

namespace detail {

// Forward-reachable set of x in the graph with edges a -> a*b over all b.
inline std::vector<bool> reach_set(const CayleyTable& op, int x) {
  const std::size_t n = op.size();
  std::vector<bool> in(n, false);
  std::vector<int> stack{x};
  in[x] = true;
  while (!stack.empty()) {
    int a = stack.back();
    stack.pop_back();
    for (std::size_t b = 0; b < n; ++b) {
      int v = op.apply(a, static_cast<int>(b));
      if (!in[v]) {
        in[v] = true;
        stack.push_back(v);
      }
    }
  }
  return in;
}

inline std::vector<int> set_times_all(const CayleyTable& op, const std::vector<int>& s) {
  const std::size_t n = op.size();
  std::vector<bool> in(n, false);
  for (int a : s)
    for (std::size_t b = 0; b < n; ++b) in[op.apply(a, static_cast<int>(b))] = true;
  std::vector<int> out;
  for (std::size_t v = 0; v < n; ++v)
    if (in[v]) out.push_back(static_cast<int>(v));
  return out;
}

}  // namespace detail

// True iff no proper non-empty subset is invariant under right
// multiplication by the whole set; decided as strong connectivity of the
// graph a -> a*b.
inline bool is_irreducible(const CayleyTable& op) {
  const std::size_t n = op.size();
  for (std::size_t x = 0; x < n; ++x) {
    auto r = detail::reach_set(op, static_cast<int>(x));
    if (std::find(r.begin(), r.end(), false) != r.end()) return false;
  }
  return true;
}

// A proper invariant subset (A * X = A), when one exists: shrink a
// non-total reach set until it stabilises.
inline std::optional<std::vector<int>> invariant_subset(const CayleyTable& op) {
  const std::size_t n = op.size();
  for (std::size_t x = 0; x < n; ++x) {
    auto r = detail::reach_set(op, static_cast<int>(x));
    if (std::find(r.begin(), r.end(), false) == r.end()) continue;
    std::vector<int> cur;
    for (std::size_t v = 0; v < n; ++v)
      if (r[v]) cur.push_back(static_cast<int>(v));
    for (;;) {
      auto next = detail::set_times_all(op, cur);
      if (next == cur) return cur;
      cur = std::move(next);
    }
  }
  return std::nullopt;
}

struct ErgodicityReport {
  bool irreducible = false;
  bool ergodic = false;
  std::size_t period = 0;  // graph period when irreducible
  std::optional<std::vector<int>> invariant_set;
  // Cyclic classes H_0..H_{p-1} with H_i * X = H_{i+1 mod p}, reported when
  // the graph is strongly connected with period p >= 2.
  std::optional<std::vector<std::vector<int>>> cyclic_classes;
};

inline ErgodicityReport ergodicity(const CayleyTable& op) {
  ErgodicityReport rep;
  rep.invariant_set = invariant_subset(op);
  rep.irreducible = !rep.invariant_set.has_value();
  if (!rep.irreducible) return rep;

  // BFS levels from 0; the period is the gcd over edges of (level step - 1).
  const std::size_t n = op.size();
  std::vector<int> dist(n, -1);
  std::vector<int> queue{0};
  dist[0] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    int a = queue[head];
    for (std::size_t b = 0; b < n; ++b) {
      int v = op.apply(a, static_cast<int>(b));
      if (dist[v] < 0) {
        dist[v] = dist[a] + 1;
        queue.push_back(v);
      }
    }
  }
  std::size_t g = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      int v = op.apply(static_cast<int>(a), static_cast<int>(b));
      long step = dist[a] + 1 - dist[v];
      g = std::gcd(g, static_cast<std::size_t>(step < 0 ? -step : step));
    }
  rep.period = g == 0 ? 1 : g;
  rep.ergodic = rep.period == 1;
  if (rep.period >= 2) {
    std::vector<std::vector<int>> classes(rep.period);
    for (std::size_t v = 0; v < n; ++v)
      classes[static_cast<std::size_t>(dist[v]) % rep.period].push_back(static_cast<int>(v));
    rep.cyclic_classes = std::move(classes);
  }
  return rep;
}

inline bool is_ergodic(const CayleyTable& op) { return ergodicity(op).ergodic; }

// Mixed-radix encoding of product sets: user 1 is the most significant
// digit. This is the one wire format used everywhere (tables, channels,
// MACs).
inline std::size_t mixed_radix_encode(const std::vector<int>& digits,
                                      const std::vector<std::size_t>& sizes) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) idx = idx * sizes[i] + digits[i];
  return idx;
}

inline std::vector<int> mixed_radix_decode(std::size_t idx, const std::vector<std::size_t>& sizes) {
  std::vector<int> digits(sizes.size());
  for (std::size_t i = sizes.size(); i-- > 0;) {
    digits[i] = static_cast<int>(idx % sizes[i]);
    idx /= sizes[i];
  }
  return digits;
}

inline CayleyTable product_op(const std::vector<CayleyTable>& ops) {
  if (ops.empty()) throw ParseError("product of zero operations");
  std::vector<std::size_t> sizes;
  std::size_t total = 1;
  for (const auto& o : ops) {
    sizes.push_back(o.size());
    total *= o.size();
    if (total > kMaxProductSize)
      throw SizeCapExceeded("product alphabet exceeds " + std::to_string(kMaxProductSize));
  }
  std::vector<int> t(total * total);
  std::vector<int> prod(ops.size());
  for (std::size_t a = 0; a < total; ++a) {
    auto da = mixed_radix_decode(a, sizes);
    for (std::size_t b = 0; b < total; ++b) {
      auto db = mixed_radix_decode(b, sizes);
      for (std::size_t i = 0; i < ops.size(); ++i) prod[i] = ops[i].apply(da[i], db[i]);
      t[a * total + b] = static_cast<int>(mixed_radix_encode(prod, sizes));
    }
  }
  return CayleyTable(total, std::move(t));
}

// Sufficient condition for a zero polarization exponent: every pair of right
// operands is collapsed by some left operand.
inline bool zero_exponent_predicate(const CayleyTable& op) {
  const std::size_t n = op.size();
  for (std::size_t u2 = 0; u2 < n; ++u2)
    for (std::size_t v2 = u2 + 1; v2 < n; ++v2) {
      bool collapsed = false;
      for (std::size_t u1 = 0; u1 < n && !collapsed; ++u1)
        collapsed = op.apply(static_cast<int>(u1), static_cast<int>(u2)) ==
                    op.apply(static_cast<int>(u1), static_cast<int>(v2));
      if (!collapsed) return false;
    }
  return true;
}

// --- text format -----------------------------------------------------------
// Line 1: n. Lines 2..n+1: n space-separated entries, row a column b holding
// a*b. Lines starting with '#' are ignored.

namespace detail {

inline std::vector<std::string> content_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string cur;
  std::istringstream in{std::string(text)};
  while (std::getline(in, cur)) {
    std::size_t i = cur.find_first_not_of(" \t\r");
    if (i == std::string::npos || cur[i] == '#') continue;
    lines.push_back(cur);
  }
  return lines;
}

}  // namespace detail

inline CayleyTable parse_op(std::string_view text) {
  auto lines = detail::content_lines(text);
  if (lines.empty()) throw ParseError("empty operation file");
  std::istringstream head(lines[0]);
  long n = 0;
  if (!(head >> n) || n < 2) throw ParseError("malformed operation header");
  std::string extra;
  if (head >> extra) throw ParseError("malformed operation header");
  if (static_cast<std::size_t>(n) > kMaxProductSize)
    throw SizeCapExceeded("operation size " + std::to_string(n) + " exceeds cap");
  if (lines.size() != static_cast<std::size_t>(n) + 1)
    throw ParseError("expected " + std::to_string(n) + " table rows");
  std::vector<int> flat;
  flat.reserve(static_cast<std::size_t>(n) * n);
  for (long a = 0; a < n; ++a) {
    std::istringstream row(lines[a + 1]);
    long v;
    long count = 0;
    while (row >> v) {
      if (v < 0 || v >= n)
        throw ParseError("entry " + std::to_string(v) + " out of range in row " +
                         std::to_string(a));
      flat.push_back(static_cast<int>(v));
      ++count;
    }
    if (count != n) throw ParseError("ragged row " + std::to_string(a));
  }
  return CayleyTable(static_cast<std::size_t>(n), std::move(flat));
}

inline std::string format_op(const CayleyTable& op) {
  std::string out = std::to_string(op.size()) + "\n";
  for (std::size_t a = 0; a < op.size(); ++a) {
    for (std::size_t b = 0; b < op.size(); ++b) {
      if (b) out += ' ';
      out += std::to_string(op.apply(static_cast<int>(a), static_cast<int>(b)));
    }
    out += '\n';
  }
  return out;
}

}  // namespace polarlab
