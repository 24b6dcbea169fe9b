#pragma once

#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "polarlab/cayley.hpp"
#include "polarlab/channel.hpp"
#include "polarlab/common.hpp"
#include "polarlab/partition.hpp"
#include "polarlab/polarize.hpp"
#include "polarlab/transform.hpp"

namespace polarlab {

// Multiple-access channel: independent uniform senders, one receiver. The
// likelihood block is a single-user channel over the product alphabet, with
// inputs in mixed-radix order (user 1 most significant).
class Mac {
 public:
  Mac(std::vector<std::size_t> user_sizes, Channel chan)
      : user_sizes_(std::move(user_sizes)), chan_(std::move(chan)) {
    if (user_sizes_.empty() || user_sizes_.size() > 3)
      throw SizeCapExceeded("MACs support at most 3 users");
    std::size_t total = 1;
    for (std::size_t s : user_sizes_) {
      if (s < 2) throw ParseError("user alphabet needs at least 2 symbols");
      total *= s;
    }
    if (total > kMaxProductSize)
      throw SizeCapExceeded("product alphabet exceeds " + std::to_string(kMaxProductSize));
    if (total != chan_.input_size()) throw ParseError("MAC input size mismatch");
  }

  std::size_t user_count() const { return user_sizes_.size(); }
  const std::vector<std::size_t>& user_sizes() const { return user_sizes_; }
  const Channel& channel() const { return chan_; }

 private:
  std::vector<std::size_t> user_sizes_;
  Channel chan_;
};

// Identity on likelihoods; sum-capacity and error probability carry over
// exactly.
inline Channel to_single_user(const Mac& mac) { return mac.channel(); }

inline double mutual_info(const Mac& mac) { return mutual_info(mac.channel()); }
inline double prob_error(const Mac& mac) { return prob_error(mac.channel()); }

namespace detail {

inline void check_ops(const Mac& mac, const std::vector<CayleyTable>& ops) {
  if (ops.size() != mac.user_count()) throw SizeMismatch("one operation per user required");
  for (std::size_t i = 0; i < ops.size(); ++i)
    if (ops[i].size() != mac.user_sizes()[i])
      throw SizeMismatch("operation " + std::to_string(i) + " does not match user alphabet");
}

}  // namespace detail

// The two MAC transforms, computed directly from the per-user operations
// (not via the product operation; agreement of the two routes is a library
// invariant the tests exercise).
inline Mac mac_transform(const Mac& mac, const std::vector<CayleyTable>& ops, Sign sign,
                         const TransformOptions& opts = {}) {
  detail::check_ops(mac, ops);
  const Channel& w = mac.channel();
  const std::size_t total = w.input_size();
  const std::size_t m = w.output_count();
  const auto& sizes = mac.user_sizes();
  const double inv_total = 1.0 / static_cast<double>(total);

  // u1 (*) u2 componentwise, both encoded.
  std::vector<std::size_t> star(total * total);
  std::vector<int> comp(sizes.size());
  for (std::size_t a = 0; a < total; ++a) {
    auto da = mixed_radix_decode(a, sizes);
    for (std::size_t b = 0; b < total; ++b) {
      auto db = mixed_radix_decode(b, sizes);
      for (std::size_t i = 0; i < sizes.size(); ++i) comp[i] = ops[i].apply(da[i], db[i]);
      star[a * total + b] = mixed_radix_encode(comp, sizes);
    }
  }

  std::vector<double> raw;
  std::size_t raw_count;
  if (sign == Sign::Minus) {
    if (m > opts.raw_limit / m) throw BudgetExceeded("raw pair alphabet exceeds limit");
    raw_count = m * m;
    raw.assign(raw_count * total, 0.0);
    for (std::size_t y1 = 0; y1 < m; ++y1)
      for (std::size_t y2 = 0; y2 < m; ++y2) {
        double* out = raw.data() + (y1 * m + y2) * total;
        for (std::size_t u1 = 0; u1 < total; ++u1) {
          double s = 0.0;
          for (std::size_t u2 = 0; u2 < total; ++u2)
            s += w.lik(y1, star[u1 * total + u2]) * w.lik(y2, u2);
          out[u1] = inv_total * s;
        }
      }
  } else {
    if (m > opts.raw_limit / (m * total)) throw BudgetExceeded("raw triple alphabet exceeds limit");
    raw_count = m * m * total;
    raw.assign(raw_count * total, 0.0);
    for (std::size_t y1 = 0; y1 < m; ++y1)
      for (std::size_t y2 = 0; y2 < m; ++y2)
        for (std::size_t u1 = 0; u1 < total; ++u1) {
          double* out = raw.data() + ((y1 * m + y2) * total + u1) * total;
          for (std::size_t u2 = 0; u2 < total; ++u2)
            out[u2] = inv_total * w.lik(y1, star[u1 * total + u2]) * w.lik(y2, u2);
        }
  }
  auto form = detail::canonical_from_raw(total, raw, raw_count);
  detail::check_budget(form, opts);
  return Mac(sizes, detail::channel_from_form(form));
}

inline Mac mac_transform_seq(const Mac& mac, const std::vector<CayleyTable>& ops,
                             const SignSeq& seq, const TransformOptions& opts = {}) {
  Mac cur(mac.user_sizes(), canonicalize(mac.channel()));
  for (Sign s : seq) cur = mac_transform(cur, ops, s, opts);
  return cur;
}

// --- canonical factorization ----------------------------------------------------

// Candidate per-user partitions obtained by projecting the blocks of a
// product-set partition onto each coordinate, then verified: each projection
// family must be a balanced partition, the block counts must multiply back,
// and every product of per-user sections must meet each block exactly once.
// Any violated check is surfaced, never patched.
inline std::vector<Partition> canonical_factorization(const Partition& h,
                                                      const std::vector<std::size_t>& user_sizes) {
  std::size_t total = 1;
  for (std::size_t s : user_sizes) total *= s;
  if (h.ground_size() != total)
    throw PartitionMismatch("partition ground set does not match product alphabet");

  std::vector<Partition> factors;
  for (std::size_t i = 0; i < user_sizes.size(); ++i) {
    std::set<std::vector<int>> projections;
    for (const auto& block : h.blocks()) {
      std::set<int> proj;
      for (int x : block) proj.insert(mixed_radix_decode(x, user_sizes)[i]);
      projections.emplace(proj.begin(), proj.end());
    }
    std::vector<std::vector<int>> blocks(projections.begin(), projections.end());
    std::size_t covered = 0;
    std::vector<bool> seen(user_sizes[i], false);
    bool disjoint = true;
    for (const auto& b : blocks)
      for (int x : b) {
        if (seen[x]) disjoint = false;
        seen[x] = true;
        ++covered;
      }
    if (!disjoint || covered != user_sizes[i])
      throw FactorizationFailed("user " + std::to_string(i + 1) +
                                " projections do not form a partition");
    Partition p(user_sizes[i], std::move(blocks));
    if (!p.balanced())
      throw FactorizationFailed("user " + std::to_string(i + 1) + " projections are unbalanced");
    factors.push_back(std::move(p));
  }

  std::size_t product_count = 1;
  for (const auto& f : factors) product_count *= f.block_count();
  if (product_count != h.block_count())
    throw FactorizationFailed("block counts do not multiply back: " +
                              std::to_string(product_count) + " vs " +
                              std::to_string(h.block_count()));

  // Sections: one representative per block, all combinations per user.
  std::vector<std::vector<std::vector<int>>> user_sections;
  for (const auto& f : factors) {
    std::vector<std::vector<int>> sections{{}};
    for (const auto& block : f.blocks()) {
      std::vector<std::vector<int>> grown;
      for (const auto& sec : sections)
        for (int x : block) {
          auto s = sec;
          s.push_back(x);
          grown.push_back(std::move(s));
        }
      sections = std::move(grown);
    }
    user_sections.push_back(std::move(sections));
  }
  std::vector<std::size_t> pick(user_sizes.size(), 0);
  for (;;) {
    // encode every tuple of the current section product
    std::vector<int> digits(user_sizes.size());
    std::vector<std::size_t> hits(h.block_count(), 0);
    std::vector<std::size_t> cursor(user_sizes.size(), 0);
    std::function<void(std::size_t)> walk = [&](std::size_t user) {
      if (user == user_sizes.size()) {
        std::size_t enc = mixed_radix_encode(digits, user_sizes);
        hits[h.block_index_of(static_cast<int>(enc))]++;
        return;
      }
      for (int x : user_sections[user][pick[user]]) {
        digits[user] = x;
        walk(user + 1);
      }
    };
    walk(0);
    for (std::size_t b = 0; b < hits.size(); ++b)
      if (hits[b] != 1)
        throw FactorizationFailed("section product meets block " + std::to_string(b) + " " +
                                  std::to_string(hits[b]) + " times");
    std::size_t i = 0;
    while (i < pick.size() && ++pick[i] == user_sections[i].size()) pick[i++] = 0;
    if (i == pick.size()) break;
  }
  return factors;
}

// --- easiness -------------------------------------------------------------------

struct MacEasinessCertificate {
  Verdict verdict = Verdict::Unknown;
  std::optional<Partition> witness;
  std::optional<std::vector<Partition>> factors;
  std::vector<std::size_t> user_levels;  // L_i
  std::size_t levels = 0;                // L = product of L_i
  double gap_capacity = 0.0;
  double gap_projected = 0.0;
  double pe_projected = 0.0;
  std::optional<bool> pe_within;
  std::string diagnostic;
};

// Witness search restricted to stable partitions of the inverse of the
// product operation, with the canonical factorization verified on every
// candidate; a factorization failure downgrades the candidate and is
// reported in the diagnostic.
inline MacEasinessCertificate mac_easiness_check(const Mac& mac,
                                                 const std::vector<CayleyTable>& ops,
                                                 double delta,
                                                 std::optional<double> epsilon = std::nullopt) {
  detail::check_ops(mac, ops);
  for (const auto& op : ops)
    if (!is_uniformity_preserving(op))
      throw NotUniformityPreserving("MAC easiness requires uniformity preserving operations");
  const Channel& w = mac.channel();
  const double info = mutual_info(w);
  CayleyTable inv = inverse_op(product_op(ops));
  MacEasinessCertificate best;
  std::string factorization_failures;

  for (const auto& h : enumerate_stable_partitions(inv)) {
    double gc = std::abs(info - std::log2(static_cast<double>(h.block_count())));
    if (gc >= delta) continue;
    Channel proj = project_channel(w, h);
    double gp = std::abs(mutual_info(proj) - std::log2(static_cast<double>(h.block_count())));
    if (gp >= delta) continue;
    std::vector<Partition> factors;
    try {
      factors = canonical_factorization(h, mac.user_sizes());
    } catch (const FactorizationFailed& e) {
      factorization_failures += std::string(factorization_failures.empty() ? "" : "; ") +
                                h.str() + ": " + e.what();
      continue;
    }
    double score = std::max(gc, gp);
    if (best.verdict != Verdict::Certified ||
        score < std::max(best.gap_capacity, best.gap_projected)) {
      best.verdict = Verdict::Certified;
      best.witness = h;
      best.factors = factors;
      best.user_levels.clear();
      for (const auto& f : factors) best.user_levels.push_back(f.block_count());
      best.levels = h.block_count();
      best.gap_capacity = gc;
      best.gap_projected = gp;
      best.pe_projected = prob_error(proj);
    }
  }

  if (best.verdict == Verdict::Certified) {
    if (epsilon) best.pe_within = best.pe_projected < *epsilon;
    return best;
  }
  bool near_integer = false;
  for (std::size_t l = 1; l <= w.input_size(); ++l)
    near_integer = near_integer || std::abs(info - std::log2(static_cast<double>(l))) < delta;
  best.verdict = near_integer ? Verdict::Unknown : Verdict::RuledOut;
  best.diagnostic = !factorization_failures.empty()
                        ? "factorization failed for: " + factorization_failures
                        : (near_integer ? "no stable-partition witness found"
                                        : "sum capacity is not near log of any integer");
  return best;
}

// --- polarization ----------------------------------------------------------------

struct MacPolarResult {
  PolarResult base;  // single-user run on the product alphabet
  std::vector<MacEasinessCertificate> mac_certs;
  double fraction_mac_certified = 0.0;
};

// Delegates to the single-user engine on the reduced channel and the product
// operation, then applies the MAC certificate at every leaf.
inline MacPolarResult mac_polarization_run(const Mac& mac, const std::vector<CayleyTable>& ops,
                                           const PolarConfig& cfg) {
  detail::check_ops(mac, ops);
  CayleyTable prod = product_op(ops);
  CayleyTable inv = inverse_op(prod);
  auto stables = enumerate_stable_partitions(inv);

  MacPolarResult out;
  std::size_t expected =
      cfg.mode == RunMode::Exhaustive ? (std::size_t{1} << cfg.depth) : cfg.samples;
  out.mac_certs.assign(expected, MacEasinessCertificate{});
  PolarConfig base_cfg = cfg;
  base_cfg.restrict_partitions = &stables;
  const auto sizes = mac.user_sizes();
  auto hook = [&](std::size_t leaf, const SignSeq&, const Channel& node) {
    out.mac_certs[leaf] = mac_easiness_check(Mac(sizes, node), ops, cfg.delta, cfg.epsilon);
  };
  out.base = polarization_run(to_single_user(mac), prod, base_cfg, hook);
  if (out.base.summary.partial) out.mac_certs.resize(out.base.records.size());
  std::size_t certified = 0;
  for (const auto& c : out.mac_certs) certified += (c.verdict == Verdict::Certified);
  if (!out.mac_certs.empty())
    out.fraction_mac_certified =
        static_cast<double>(certified) / static_cast<double>(out.mac_certs.size());
  return out;
}

// --- text format ------------------------------------------------------------------
// Line 1: "m |X_1| .. |X_m| |Y|". Next prod(|X_i|) lines: |Y| probabilities,
// inputs in mixed-radix order with user 1 most significant.

inline Mac parse_mac(std::string_view text) {
  auto lines = detail::content_lines(text);
  if (lines.empty()) throw ParseError("empty MAC file");
  std::istringstream head(lines[0]);
  long m_users = 0;
  if (!(head >> m_users) || m_users < 1 || m_users > 3) throw ParseError("malformed MAC header");
  std::vector<std::size_t> sizes;
  std::size_t total = 1;
  for (long i = 0; i < m_users; ++i) {
    long s;
    if (!(head >> s) || s < 2) throw ParseError("malformed MAC header");
    sizes.push_back(static_cast<std::size_t>(s));
    total *= static_cast<std::size_t>(s);
  }
  long outs = 0;
  if (!(head >> outs) || outs < 1) throw ParseError("malformed MAC header");
  std::string extra;
  if (head >> extra) throw ParseError("malformed MAC header");
  if (lines.size() != total + 1)
    throw ParseError("expected " + std::to_string(total) + " MAC rows");
  std::vector<double> lik(total * static_cast<std::size_t>(outs));
  for (std::size_t x = 0; x < total; ++x) {
    std::istringstream row(lines[x + 1]);
    double v;
    long count = 0;
    while (row >> v) {
      if (count >= outs) throw ParseError("ragged MAC row " + std::to_string(x));
      lik[static_cast<std::size_t>(count) * total + x] = v;
      ++count;
    }
    if (count != outs) throw ParseError("ragged MAC row " + std::to_string(x));
  }
  return Mac(sizes, Channel(total, static_cast<std::size_t>(outs), std::move(lik)));
}

inline std::string format_mac(const Mac& mac) {
  std::ostringstream out;
  out << mac.user_count();
  for (std::size_t s : mac.user_sizes()) out << ' ' << s;
  out << ' ' << mac.channel().output_count() << '\n';
  out.precision(17);
  for (std::size_t x = 0; x < mac.channel().input_size(); ++x) {
    for (std::size_t y = 0; y < mac.channel().output_count(); ++y) {
      if (y) out << ' ';
      out << mac.channel().lik(y, x);
    }
    out << '\n';
  }
  return out.str();
}

// Two-user adder: y = x1 + x2.
inline Mac binary_adder_mac() {
  std::vector<double> lik(3 * 4, 0.0);
  lik[0 * 4 + 0] = 1.0;                      // (0,0) -> 0
  lik[1 * 4 + 1] = lik[1 * 4 + 2] = 1.0;     // (0,1),(1,0) -> 1
  lik[2 * 4 + 3] = 1.0;                      // (1,1) -> 2
  return Mac({2, 2}, Channel(4, 3, std::move(lik), {"0", "1", "2"}));
}

inline Mac random_mac(std::uint64_t seed, std::vector<std::size_t> user_sizes, std::size_t outs) {
  std::size_t total = 1;
  for (std::size_t s : user_sizes) total *= s;
  return Mac(std::move(user_sizes), random_channel(seed, total, outs));
}

}  // namespace polarlab
