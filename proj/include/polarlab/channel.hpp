#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "polarlab/cayley.hpp"
#include "polarlab/common.hpp"
#include "polarlab/partition.hpp"
#include "polarlab/rng.hpp"

namespace polarlab {

inline double log2_safe(double x) { return std::log2(x); }

inline double entropy2(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// Discrete memoryless channel with uniform input convention. Likelihoods are
// stored flat, output-major: lik[y * input_size + x] = W(y|x).
class Channel {
 public:
  Channel(std::size_t input_size, std::size_t output_count, std::vector<double> lik,
          std::vector<std::string> labels = {})
      : input_size_(input_size), output_count_(output_count), lik_(std::move(lik)),
        labels_(std::move(labels)) {
    if (input_size_ == 0 || output_count_ == 0 || lik_.size() != input_size_ * output_count_)
      throw ParseError("channel shape mismatch");
    if (!labels_.empty() && labels_.size() != output_count_)
      throw ParseError("label count mismatch");
    for (double v : lik_)
      if (!(v >= -kRowSumTol) || !(v <= 1.0 + kRowSumTol))
        throw ParseError("likelihood outside [0,1]");
    for (std::size_t x = 0; x < input_size_; ++x) {
      double s = 0.0;
      for (std::size_t y = 0; y < output_count_; ++y) s += lik_[y * input_size_ + x];
      if (std::abs(s - 1.0) > kRowSumTol)
        throw ParseError("input row " + std::to_string(x) + " sums to " + std::to_string(s));
    }
  }

  std::size_t input_size() const { return input_size_; }
  std::size_t output_count() const { return output_count_; }
  double lik(std::size_t y, std::size_t x) const { return lik_[y * input_size_ + x]; }
  const std::vector<double>& flat() const { return lik_; }
  const std::vector<std::string>& labels() const { return labels_; }

  // Output mass under uniform input.
  double output_mass(std::size_t y) const {
    double s = 0.0;
    for (std::size_t x = 0; x < input_size_; ++x) s += lik(y, x);
    return s / static_cast<double>(input_size_);
  }

 private:
  std::size_t input_size_;
  std::size_t output_count_;
  std::vector<double> lik_;
  std::vector<std::string> labels_;
};

// --- information measures ---------------------------------------------------

// Symmetric capacity I(X;Y) with X uniform, in bits.
inline double mutual_info(const Channel& w) {
  const double n = static_cast<double>(w.input_size());
  double info = 0.0;
  for (std::size_t y = 0; y < w.output_count(); ++y) {
    double q = w.output_mass(y);
    if (q <= 0.0) continue;
    for (std::size_t x = 0; x < w.input_size(); ++x) {
      double v = w.lik(y, x);
      if (v <= 0.0) continue;
      info += (v / n) * std::log2(v / q);
    }
  }
  return info;
}

// Error probability of the ML decoder under uniform input. The value does
// not depend on how ties are broken.
inline double prob_error(const Channel& w) {
  const double n = static_cast<double>(w.input_size());
  double correct = 0.0;
  for (std::size_t y = 0; y < w.output_count(); ++y) {
    double best = 0.0;
    for (std::size_t x = 0; x < w.input_size(); ++x) best = std::max(best, w.lik(y, x));
    correct += best / n;
  }
  return 1.0 - correct;
}

inline double bhattacharyya_pair(const Channel& w, int x, int xp) {
  double z = 0.0;
  for (std::size_t y = 0; y < w.output_count(); ++y)
    z += std::sqrt(w.lik(y, x) * w.lik(y, xp));
  return z;
}

struct BhattacharyyaStats {
  double z = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
};

inline BhattacharyyaStats bhattacharyya(const Channel& w) {
  const std::size_t n = w.input_size();
  if (n < 2) throw InputTooSmall("Bhattacharyya parameter needs at least two inputs");
  BhattacharyyaStats s;
  s.z_min = 2.0;
  double sum = 0.0;
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t xp = x + 1; xp < n; ++xp) {
      double z = bhattacharyya_pair(w, static_cast<int>(x), static_cast<int>(xp));
      sum += 2.0 * z;  // both ordered pairs
      s.z_min = std::min(s.z_min, z);
      s.z_max = std::max(s.z_max, z);
    }
  s.z = sum / (static_cast<double>(n) * static_cast<double>(n - 1));
  return s;
}

// Full pairwise matrix Z(W_{x,x'}); diagonal is 1.
inline std::vector<std::vector<double>> bhattacharyya_matrix(const Channel& w) {
  const std::size_t n = w.input_size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 1.0));
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t xp = x + 1; xp < n; ++xp)
      m[x][xp] = m[xp][x] = bhattacharyya_pair(w, static_cast<int>(x), static_cast<int>(xp));
  return m;
}

// Channel from blocks of H to the same outputs, mixing uniformly inside each
// block.
inline Channel project_channel(const Channel& w, const Partition& h) {
  if (h.ground_size() != w.input_size())
    throw PartitionMismatch("partition ground set does not match channel input");
  const std::size_t k = h.block_count();
  std::vector<double> lik(w.output_count() * k, 0.0);
  for (std::size_t y = 0; y < w.output_count(); ++y)
    for (std::size_t i = 0; i < k; ++i) {
      const auto& b = h.blocks()[i];
      double s = 0.0;
      for (int x : b) s += w.lik(y, x);
      lik[y * k + i] = s / static_cast<double>(b.size());
    }
  return Channel(k, w.output_count(), std::move(lik), w.labels());
}

// --- canonical form ----------------------------------------------------------
// Uniform-input sufficient statistic: outputs keyed by their posterior
// vector. Zero-mass outputs are dropped, equal-posterior outputs merged with
// masses added, entries sorted lexicographically by posterior then mass.

struct CanonicalForm {
  struct Entry {
    double mass = 0.0;
    std::vector<double> posterior;
  };
  std::size_t input_size = 0;
  double merge_tol = kMergeTol;
  std::vector<Entry> entries;
};

namespace detail {

// Shared finishing step for transforms and canonicalization: given raw
// likelihood columns (flat, output-major), produce merged canonical entries.
inline CanonicalForm canonical_from_raw(std::size_t input_size, std::vector<double>& raw,
                                        std::size_t count) {
  const double n = static_cast<double>(input_size);
  std::vector<std::size_t> keep;
  std::vector<double> mass(count);
  keep.reserve(count);
  for (std::size_t y = 0; y < count; ++y) {
    double s = 0.0;
    for (std::size_t x = 0; x < input_size; ++x) s += raw[y * input_size + x];
    // / n can underflow subnormal sums to an exact zero; such an output is
    // indistinguishable from absent at double precision
    if (s <= 0.0 || s / n <= 0.0) continue;
    mass[y] = s / n;
    for (std::size_t x = 0; x < input_size; ++x) raw[y * input_size + x] /= s;  // now posterior
    keep.push_back(y);
  }
  auto post = [&](std::size_t y) { return raw.data() + y * input_size; };
  std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    const double* pa = post(a);
    const double* pb = post(b);
    for (std::size_t x = 0; x < input_size; ++x) {
      if (pa[x] < pb[x]) return true;
      if (pa[x] > pb[x]) return false;
    }
    return mass[a] < mass[b];
  });

  CanonicalForm form;
  form.input_size = input_size;
  std::size_t i = 0;
  while (i < keep.size()) {
    std::size_t j = i;
    const double* head = post(keep[i]);
    double msum = 0.0, mmax = 0.0;
    while (j < keep.size()) {
      const double* pj = post(keep[j]);
      bool same = true;
      for (std::size_t x = 0; x < input_size && same; ++x)
        same = std::abs(pj[x] - head[x]) <= kMergeTol;
      if (!same) break;
      msum += mass[keep[j]];
      mmax = std::max(mmax, mass[keep[j]]);
      ++j;
    }
    // representative posterior: mass-weighted mean, with weights scaled by
    // the cluster maximum so subnormal masses cannot underflow the products
    std::vector<double> acc(input_size, 0.0);
    double wsum = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      double wgt = mass[keep[k]] / mmax;
      wsum += wgt;
      const double* pk = post(keep[k]);
      for (std::size_t x = 0; x < input_size; ++x) acc[x] += wgt * pk[x];
    }
    for (std::size_t x = 0; x < input_size; ++x) acc[x] /= wsum;
    form.entries.push_back({msum, std::move(acc)});
    i = j;
  }
  return form;
}

inline Channel channel_from_form(const CanonicalForm& form) {
  const std::size_t n = form.input_size;
  std::vector<double> lik(form.entries.size() * n);
  for (std::size_t y = 0; y < form.entries.size(); ++y)
    for (std::size_t x = 0; x < n; ++x)
      lik[y * n + x] = static_cast<double>(n) * form.entries[y].mass * form.entries[y].posterior[x];
  return Channel(n, form.entries.size(), std::move(lik));
}

}  // namespace detail

inline CanonicalForm canonical_form(const Channel& w) {
  std::vector<double> raw = w.flat();
  return detail::canonical_from_raw(w.input_size(), raw, w.output_count());
}

inline Channel canonicalize(const Channel& w) {
  return detail::channel_from_form(canonical_form(w));
}

namespace detail {

inline bool entries_close(const CanonicalForm::Entry& a, const CanonicalForm::Entry& b,
                          double tol) {
  if (std::abs(a.mass - b.mass) > tol) return false;
  for (std::size_t x = 0; x < a.posterior.size(); ++x)
    if (std::abs(a.posterior[x] - b.posterior[x]) > tol) return false;
  return true;
}

}  // namespace detail

inline bool forms_equal(const CanonicalForm& f1, const CanonicalForm& f2,
                        double tol = kEquivTol) {
  if (f1.input_size != f2.input_size) return false;
  // Entries lighter than the tolerance cannot be distinguished from absent
  // outputs at this tolerance.
  auto weighty = [&](const CanonicalForm& f) {
    std::vector<const CanonicalForm::Entry*> out;
    for (const auto& e : f.entries)
      if (e.mass > tol) out.push_back(&e);
    return out;
  };
  auto e1 = weighty(f1);
  auto e2 = weighty(f2);
  if (e1.size() != e2.size()) return false;
  const std::size_t k = e1.size();
  bool aligned = true;
  for (std::size_t i = 0; i < k && aligned; ++i)
    aligned = detail::entries_close(*e1[i], *e2[i], tol);
  if (aligned) return true;
  if (k > 4096) return false;
  // Near-equal first components can sort in different orders; fall back to
  // greedy matching.
  std::vector<bool> used(k, false);
  for (std::size_t i = 0; i < k; ++i) {
    bool found = false;
    for (std::size_t j = 0; j < k && !found; ++j) {
      if (used[j]) continue;
      if (detail::entries_close(*e1[i], *e2[j], tol)) {
        used[j] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

// Equality of canonical forms, the working notion of channel equivalence.
inline bool equivalent(const Channel& w1, const Channel& w2) {
  if (w1.input_size() != w2.input_size())
    throw InputSizeMismatch("equivalence needs a common input alphabet");
  return forms_equal(canonical_form(w1), canonical_form(w2));
}

// Total output mass of outputs whose posterior is within gamma (sup norm) of
// the uniform distribution on some block of H.
inline double partition_affinity(const Channel& w, const Partition& h, double gamma) {
  if (h.ground_size() != w.input_size())
    throw PartitionMismatch("partition ground set does not match channel input");
  const double n = static_cast<double>(w.input_size());
  double mass = 0.0;
  for (std::size_t y = 0; y < w.output_count(); ++y) {
    double q = w.output_mass(y);
    if (q <= 0.0) continue;
    bool close = false;
    for (std::size_t i = 0; i < h.block_count() && !close; ++i) {
      const auto& b = h.blocks()[i];
      double target = 1.0 / static_cast<double>(b.size());
      double dist = 0.0;
      std::size_t bi = 0;
      for (std::size_t x = 0; x < w.input_size(); ++x) {
        double p = w.lik(y, x) / (n * q);
        bool in_block = bi < b.size() && b[bi] == static_cast<int>(x);
        if (in_block) ++bi;
        dist = std::max(dist, std::abs(p - (in_block ? target : 0.0)));
      }
      close = dist < gamma;
    }
    if (close) mass += q;
  }
  return mass;
}

// --- easiness certificates ---------------------------------------------------

enum class Verdict { Certified, RuledOut, Unknown };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "Certified";
    case Verdict::RuledOut: return "RuledOut";
    default: return "Unknown";
  }
}

struct EasinessCertificate {
  Verdict verdict = Verdict::Unknown;
  std::optional<Partition> witness;
  std::size_t levels = 0;  // L = number of blocks of the witness
  double gap_capacity = 0.0;
  double gap_projected = 0.0;
  double pe_projected = 0.0;
  std::optional<bool> pe_within;  // set when an error-probability bound was requested
  std::string diagnostic;
};

// Witness search for the blocklength-1 coding certificate. Certified when
// some balanced partition H has both |I(W) - log|H|| and |I(W[H]) - log|H||
// below delta (best witness = smallest max gap); RuledOut when no integer
// L <= |X| has |I(W) - log L| < delta; otherwise Unknown. The sufficient and
// necessary sides are deliberately distinct: a certificate never claims more
// than the partition witness supports.
inline EasinessCertificate easiness_check(const Channel& w, double delta,
                                          std::optional<double> epsilon = std::nullopt,
                                          const std::vector<Partition>* restrict_to = nullptr) {
  if (delta <= 0.0) throw Error("easiness threshold must be positive");
  const double info = mutual_info(w);
  EasinessCertificate best;

  auto consider = [&](const Partition& h) {
    if (!h.balanced()) return true;
    double gc = std::abs(info - std::log2(static_cast<double>(h.block_count())));
    if (gc >= delta) return true;
    Channel proj = project_channel(w, h);
    double gp =
        std::abs(mutual_info(proj) - std::log2(static_cast<double>(h.block_count())));
    if (gp >= delta) return true;
    double score = std::max(gc, gp);
    if (best.verdict != Verdict::Certified || score < std::max(best.gap_capacity, best.gap_projected)) {
      best.verdict = Verdict::Certified;
      best.witness = h;
      best.levels = h.block_count();
      best.gap_capacity = gc;
      best.gap_projected = gp;
      best.pe_projected = prob_error(proj);
    }
    return true;
  };

  if (restrict_to != nullptr) {
    for (const auto& h : *restrict_to) consider(h);
  } else {
    if (w.input_size() > kMaxUnrestrictedEasinessSize)
      throw SizeCapExceeded("unrestricted witness search capped at " +
                            std::to_string(kMaxUnrestrictedEasinessSize) + " inputs");
    for_each_balanced_partition(w.input_size(), consider);
  }

  if (best.verdict == Verdict::Certified) {
    if (epsilon) best.pe_within = best.pe_projected < *epsilon;
    return best;
  }

  bool near_integer = false;
  for (std::size_t l = 1; l <= w.input_size(); ++l)
    near_integer = near_integer || std::abs(info - std::log2(static_cast<double>(l))) < delta;
  best.verdict = near_integer ? Verdict::Unknown : Verdict::RuledOut;
  best.diagnostic = near_integer ? "no partition witness found" : "capacity is not near log of any integer";
  return best;
}

// --- fixtures ----------------------------------------------------------------

inline Channel perfect_channel(std::size_t n) {
  std::vector<double> lik(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) lik[i * n + i] = 1.0;
  return Channel(n, n, std::move(lik));
}

inline Channel useless_channel(std::size_t n, std::size_t m_outputs) {
  std::vector<double> lik(n * m_outputs, 1.0 / static_cast<double>(m_outputs));
  return Channel(n, m_outputs, std::move(lik));
}

inline Channel bec(double p) {
  return Channel(2, 3, {1.0 - p, 0.0, 0.0, 1.0 - p, p, p}, {"0", "1", "e"});
}

inline Channel bsc(double q) {
  return Channel(2, 2, {1.0 - q, q, q, 1.0 - q}, {"0", "1"});
}

inline Channel random_channel(std::uint64_t seed, std::size_t n, std::size_t m) {
  SplitMix64 g(derive_stream(seed, 0x6368616eULL));
  std::vector<double> rows(n * m);
  for (std::size_t x = 0; x < n; ++x) {
    double s = 0.0;
    for (std::size_t y = 0; y < m; ++y) {
      double v = g.next_unit() + 1e-6;
      rows[x * m + y] = v;
      s += v;
    }
    for (std::size_t y = 0; y < m; ++y) rows[x * m + y] /= s;
  }
  std::vector<double> lik(n * m);
  for (std::size_t y = 0; y < m; ++y)
    for (std::size_t x = 0; x < n; ++x) lik[y * n + x] = rows[x * m + y];
  return Channel(n, m, std::move(lik));
}

// q-ary erasure channel: output equals the input with probability 1-eps,
// otherwise a single erasure symbol.
inline Channel erasure_channel(std::size_t n, double eps) {
  std::vector<double> lik((n + 1) * n, 0.0);
  std::vector<std::string> labels;
  for (std::size_t y = 0; y < n; ++y) {
    lik[y * n + y] = 1.0 - eps;
    labels.push_back(std::to_string(y));
  }
  for (std::size_t x = 0; x < n; ++x) lik[n * n + x] = eps;
  labels.push_back("e");
  return Channel(n, n + 1, std::move(lik), std::move(labels));
}

// Two invariant classes and an erasure: output y in {1,2} reveals the class
// of x with probability 1-eps.
inline Channel absorbing_channel(const std::vector<int>& a1, const std::vector<int>& a2,
                                 double eps, std::size_t n) {
  Partition check(n, {a1, a2});  // validates disjoint cover
  (void)check;
  std::vector<double> lik(3 * n, 0.0);
  for (int x : a1) lik[0 * n + x] = 1.0 - eps;
  for (int x : a2) lik[1 * n + x] = 1.0 - eps;
  for (std::size_t x = 0; x < n; ++x) lik[2 * n + x] = eps;
  return Channel(n, 3, std::move(lik), {"1", "2", "e"});
}

// Cyclic class labels shifted by i, plus an erasure symbol.
inline Channel cyclic_channel(const std::vector<std::vector<int>>& classes, std::size_t shift,
                              double eps) {
  const std::size_t r = classes.size();
  std::size_t n = 0;
  for (const auto& c : classes) {
    if (c.empty() || c.size() != classes[0].size())
      throw PartitionMismatch("cyclic classes must be non-empty and equal-sized");
    n += c.size();
  }
  {
    Partition check(n, {classes.begin(), classes.end()});  // validates disjoint cover
    (void)check;
  }
  std::vector<double> lik((r + 1) * n, 0.0);
  std::vector<std::string> labels;
  for (std::size_t y = 0; y < r; ++y) {
    for (int x : classes[(y + shift) % r]) lik[y * n + x] = 1.0 - eps;
    labels.push_back(std::to_string(y));
  }
  for (std::size_t x = 0; x < n; ++x) lik[r * n + x] = eps;
  labels.push_back("e");
  return Channel(n, r + 1, std::move(lik), std::move(labels));
}

// Output alphabet = blocks of K^{i*} (weight 1-eps) together with blocks of
// H^{i*} (weight eps), where K is the first residue of the stable partition
// H under op.
inline Channel residue_channel(const CayleyTable& op, const Partition& h, std::size_t iterate,
                               double eps) {
  Partition k = first_residue(op, h);
  auto hi = stable_iterates(op, h);
  auto ki = stable_iterates(op, k);
  const Partition& hIt = hi->at(iterate);
  const Partition& kIt = ki->at(iterate);
  const std::size_t n = op.size();
  const std::size_t outs = kIt.block_count() + hIt.block_count();
  std::vector<double> lik(outs * n, 0.0);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < kIt.block_count(); ++i) {
    for (int x : kIt.blocks()[i]) lik[i * n + x] = 1.0 - eps;
    labels.push_back("K:" + std::to_string(i));
  }
  for (std::size_t i = 0; i < hIt.block_count(); ++i) {
    std::size_t y = kIt.block_count() + i;
    for (int x : hIt.blocks()[i]) lik[y * n + x] = eps;
    labels.push_back("H:" + std::to_string(i));
  }
  return Channel(n, outs, std::move(lik), std::move(labels));
}

// --- text format -------------------------------------------------------------
// Line 1: "|X| |Y|". Next |X| lines: |Y| probabilities (row = input).

inline Channel parse_channel(std::string_view text) {
  auto lines = detail::content_lines(text);
  if (lines.empty()) throw ParseError("empty channel file");
  std::istringstream head(lines[0]);
  long n = 0, m = 0;
  if (!(head >> n >> m) || n < 1 || m < 1) throw ParseError("malformed channel header");
  std::string extra;
  if (head >> extra) throw ParseError("malformed channel header");
  if (lines.size() != static_cast<std::size_t>(n) + 1)
    throw ParseError("expected " + std::to_string(n) + " channel rows");
  std::vector<double> lik(static_cast<std::size_t>(n) * m);
  for (long x = 0; x < n; ++x) {
    std::istringstream row(lines[x + 1]);
    double v;
    long count = 0;
    while (row >> v) {
      if (count >= m) throw ParseError("ragged channel row " + std::to_string(x));
      lik[static_cast<std::size_t>(count) * n + x] = v;
      ++count;
    }
    if (count != m) throw ParseError("ragged channel row " + std::to_string(x));
  }
  return Channel(static_cast<std::size_t>(n), static_cast<std::size_t>(m), std::move(lik));
}

inline std::string format_channel(const Channel& w) {
  std::ostringstream out;
  out << w.input_size() << ' ' << w.output_count() << '\n';
  out.precision(17);
  for (std::size_t x = 0; x < w.input_size(); ++x) {
    for (std::size_t y = 0; y < w.output_count(); ++y) {
      if (y) out << ' ';
      out << w.lik(y, x);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace polarlab
