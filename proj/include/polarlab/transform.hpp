#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polarlab/cayley.hpp"
#include "polarlab/channel.hpp"
#include "polarlab/common.hpp"

namespace polarlab {

enum class Sign : std::uint8_t { Minus, Plus };

using SignSeq = std::vector<Sign>;

inline SignSeq parse_signs(std::string_view text) {
  SignSeq s;
  for (char c : text) {
    if (c == '-') s.push_back(Sign::Minus);
    else if (c == '+') s.push_back(Sign::Plus);
    else if (c != ' ') throw ParseError("sign sequences use only '-' and '+'");
  }
  return s;
}

inline std::string sign_string(const SignSeq& s) {
  std::string out;
  for (Sign v : s) out += (v == Sign::Minus ? '-' : '+');
  return out;
}

inline std::size_t minus_count(const SignSeq& s) {
  std::size_t k = 0;
  for (Sign v : s) k += (v == Sign::Minus);
  return k;
}

inline std::size_t plus_count(const SignSeq& s) { return s.size() - minus_count(s); }

struct TransformOptions {
  std::size_t max_outputs = kDefaultOutputBudget;  // cap on the canonical alphabet
  std::size_t raw_limit = kRawOutputLimit;         // cap on pre-merge materialization
};

namespace detail {

inline void check_budget(const CanonicalForm& form, const TransformOptions& opts) {
  if (form.entries.size() > opts.max_outputs)
    throw BudgetExceeded("canonical output alphabet " + std::to_string(form.entries.size()) +
                         " exceeds budget " + std::to_string(opts.max_outputs));
}

}  // namespace detail

// W-(y1,y2|u1) = (1/|X|) sum_{u2} W(y1|u1*u2) W(y2|u2), merged to canonical
// outputs.
inline Channel minus_transform(const Channel& w, const CayleyTable& op,
                               const TransformOptions& opts = {}) {
  const std::size_t n = w.input_size();
  if (op.size() != n) throw SizeMismatch("operation size does not match channel input");
  const std::size_t m = w.output_count();
  if (m > opts.raw_limit / m)
    throw BudgetExceeded("raw pair alphabet " + std::to_string(m) + "^2 exceeds limit");
  const std::size_t raw_count = m * m;
  std::vector<double> raw(raw_count * n);
  const double inv_n = 1.0 / static_cast<double>(n);
  // products[y1*n + u1][u2] = W(y1|u1*u2)
  std::vector<double> table(m * n * n);
  for (std::size_t y1 = 0; y1 < m; ++y1)
    for (std::size_t u1 = 0; u1 < n; ++u1)
      for (std::size_t u2 = 0; u2 < n; ++u2)
        table[(y1 * n + u1) * n + u2] =
            w.lik(y1, op.apply(static_cast<int>(u1), static_cast<int>(u2)));
  for (std::size_t y1 = 0; y1 < m; ++y1)
    for (std::size_t y2 = 0; y2 < m; ++y2) {
      double* out = raw.data() + (y1 * m + y2) * n;
      for (std::size_t u1 = 0; u1 < n; ++u1) {
        double s = 0.0;
        const double* row = table.data() + (y1 * n + u1) * n;
        for (std::size_t u2 = 0; u2 < n; ++u2) s += row[u2] * w.lik(y2, u2);
        out[u1] = inv_n * s;
      }
    }
  auto form = detail::canonical_from_raw(n, raw, raw_count);
  detail::check_budget(form, opts);
  return detail::channel_from_form(form);
}

// W+(y1,y2,u1|u2) = (1/|X|) W(y1|u1*u2) W(y2|u2), merged to canonical
// outputs.
inline Channel plus_transform(const Channel& w, const CayleyTable& op,
                              const TransformOptions& opts = {}) {
  const std::size_t n = w.input_size();
  if (op.size() != n) throw SizeMismatch("operation size does not match channel input");
  const std::size_t m = w.output_count();
  if (m > opts.raw_limit / (m * n))
    throw BudgetExceeded("raw triple alphabet exceeds limit");
  const std::size_t raw_count = m * m * n;
  std::vector<double> raw(raw_count * n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t y1 = 0; y1 < m; ++y1)
    for (std::size_t y2 = 0; y2 < m; ++y2)
      for (std::size_t u1 = 0; u1 < n; ++u1) {
        double* out = raw.data() + ((y1 * m + y2) * n + u1) * n;
        for (std::size_t u2 = 0; u2 < n; ++u2)
          out[u2] = inv_n * w.lik(y1, op.apply(static_cast<int>(u1), static_cast<int>(u2))) *
                    w.lik(y2, u2);
      }
  auto form = detail::canonical_from_raw(n, raw, raw_count);
  detail::check_budget(form, opts);
  return detail::channel_from_form(form);
}

inline Channel apply_transform(const Channel& w, const CayleyTable& op, Sign s,
                               const TransformOptions& opts = {}) {
  return s == Sign::Minus ? minus_transform(w, op, opts) : plus_transform(w, op, opts);
}

// Left-to-right fold of the sign sequence, canonicalizing after each step.
inline Channel transform_seq(const Channel& w, const CayleyTable& op, const SignSeq& seq,
                             const TransformOptions& opts = {}) {
  Channel cur = canonicalize(w);
  for (Sign s : seq) cur = apply_transform(cur, op, s, opts);
  return cur;
}

// Recursive halves combiner over sequences of 2^k elements.
inline int g_combine(const CayleyTable& op, std::span<const int> xs) {
  const std::size_t len = xs.size();
  if (len == 0 || (len & (len - 1)) != 0)
    throw LengthNotPowerOfTwo("combiner input length must be a power of two");
  if (len == 1) return xs[0];
  return op.apply(g_combine(op, xs.subspan(0, len / 2)), g_combine(op, xs.subspan(len / 2)));
}

// Visits every node of the transform tree up to the given depth (the root
// included), sharing prefixes so each channel is computed once.
template <typename Fn>
void for_each_transform_node(const Channel& w, const CayleyTable& op, std::size_t depth,
                             const TransformOptions& opts, Fn&& fn) {
  SignSeq seq;
  auto rec = [&](auto&& self, const Channel& cur) -> void {
    fn(static_cast<const SignSeq&>(seq), cur);
    if (seq.size() == depth) return;
    seq.push_back(Sign::Minus);
    self(self, minus_transform(cur, op, opts));
    seq.back() = Sign::Plus;
    self(self, plus_transform(cur, op, opts));
    seq.pop_back();
  };
  rec(rec, canonicalize(w));
}

}  // namespace polarlab
