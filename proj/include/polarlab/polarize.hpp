#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <mutex>
#include <optional>
#include <vector>

#include "polarlab/cayley.hpp"
#include "polarlab/channel.hpp"
#include "polarlab/common.hpp"
#include "polarlab/partition.hpp"
#include "polarlab/rng.hpp"
#include "polarlab/transform.hpp"

namespace polarlab {

enum class RunMode { Exhaustive, MonteCarlo };

struct PolarConfig {
  std::size_t depth = 0;
  RunMode mode = RunMode::Exhaustive;
  std::size_t samples = 0;       // Monte-Carlo paths
  std::uint64_t seed = 0;        // required for Monte-Carlo
  double delta = 0.05;
  std::optional<double> epsilon;
  TransformOptions budget;
  unsigned threads = 1;
  double histogram_width = 0.05;
  bool allow_non_uniformity_preserving = false;
  // When set, the per-leaf witness search is restricted to these partitions.
  const std::vector<Partition>* restrict_partitions = nullptr;
};

struct PolarRecord {
  SignSeq seq;
  double info = 0.0;
  double z = 0.0, z_min = 0.0, z_max = 0.0;
  std::size_t outputs = 0;
  EasinessCertificate cert;
};

struct PolarSummary {
  std::size_t leaf_count = 0;
  double mean_info = 0.0;
  double fraction_certified = 0.0;
  double histogram_width = 0.05;
  std::vector<std::size_t> histogram;
  bool partial = false;
};

struct PolarResult {
  std::vector<PolarRecord> records;
  PolarSummary summary;
};

// Optional observer invoked once per leaf with its synthesized channel;
// slots are indexed by leaf position so parallel workers never contend.
using LeafHook = std::function<void(std::size_t leaf_index, const SignSeq&, const Channel&)>;

namespace detail {

inline PolarRecord make_record(SignSeq seq, const Channel& w, const PolarConfig& cfg) {
  PolarRecord rec;
  rec.seq = std::move(seq);
  rec.info = mutual_info(w);
  auto bh = bhattacharyya(w);
  rec.z = bh.z;
  rec.z_min = bh.z_min;
  rec.z_max = bh.z_max;
  rec.outputs = w.output_count();
  rec.cert = easiness_check(w, cfg.delta, cfg.epsilon, cfg.restrict_partitions);
  return rec;
}

// Shared-prefix expansion: each node's channel is computed once; subtrees
// down to split_depth run as independent tasks.
inline void expand_tree(const Channel& w, const CayleyTable& op, const PolarConfig& cfg,
                        SignSeq& prefix, std::size_t leaf_base, unsigned split_levels,
                        std::vector<PolarRecord>& records, const LeafHook& hook,
                        std::atomic<bool>& aborted) {
  if (aborted.load(std::memory_order_relaxed)) return;
  if (prefix.size() == cfg.depth) {
    records[leaf_base] = make_record(prefix, w, cfg);
    if (hook) hook(leaf_base, prefix, w);
    return;
  }
  const std::size_t child_leaves = std::size_t{1} << (cfg.depth - prefix.size() - 1);
  auto child = [&](Sign s) -> Channel {
    try {
      return apply_transform(w, op, s, cfg.budget);
    } catch (...) {
      aborted.store(true, std::memory_order_relaxed);
      throw;
    }
  };
  if (split_levels > 0) {
    Channel minus = child(Sign::Minus);
    Channel plus = child(Sign::Plus);
    SignSeq left = prefix, right = prefix;
    left.push_back(Sign::Minus);
    right.push_back(Sign::Plus);
    auto fut = std::async(std::launch::async, [&, left]() mutable {
      expand_tree(minus, op, cfg, left, leaf_base, split_levels - 1, records, hook, aborted);
    });
    expand_tree(plus, op, cfg, right, leaf_base + child_leaves, split_levels - 1, records, hook,
                aborted);
    fut.get();
  } else {
    // one child at a time, so a later budget overrun keeps the finished
    // subtree's leaves for the partial flush
    prefix.push_back(Sign::Minus);
    expand_tree(child(Sign::Minus), op, cfg, prefix, leaf_base, 0, records, hook, aborted);
    prefix.back() = Sign::Plus;
    expand_tree(child(Sign::Plus), op, cfg, prefix, leaf_base + child_leaves, 0, records, hook,
                aborted);
    prefix.pop_back();
  }
}

inline PolarSummary summarize(const std::vector<PolarRecord>& records, std::size_t input_size,
                              double width, bool partial) {
  PolarSummary s;
  s.leaf_count = records.size();
  s.histogram_width = width;
  s.partial = partial;
  double max_info = std::log2(static_cast<double>(input_size));
  std::size_t buckets = static_cast<std::size_t>(std::ceil(max_info / width)) + 1;
  s.histogram.assign(buckets, 0);
  std::size_t certified = 0;
  for (const auto& r : records) {
    s.mean_info += r.info;
    certified += (r.cert.verdict == Verdict::Certified);
    auto b = static_cast<std::size_t>(r.info / width);
    s.histogram[std::min(b, buckets - 1)]++;
  }
  if (!records.empty()) {
    s.mean_info /= static_cast<double>(records.size());
    s.fraction_certified = static_cast<double>(certified) / static_cast<double>(records.size());
  }
  return s;
}

}  // namespace detail

// The synthetic-channel process over sign sequences. Exhaustive mode visits
// all 2^depth sequences via a shared-prefix tree; Monte-Carlo mode draws
// sequences from counter-based per-path streams, so results are independent
// of the thread count. Throws BudgetExceeded only after flushing nothing; a
// partial result is returned instead when at least one leaf finished.
inline PolarResult polarization_run(const Channel& w, const CayleyTable& op,
                                    const PolarConfig& cfg, const LeafHook& hook = {}) {
  if (op.size() != w.input_size())
    throw SizeMismatch("operation size does not match channel input");
  if (!cfg.allow_non_uniformity_preserving && !is_uniformity_preserving(op))
    throw NotUniformityPreserving(
        "operation is not uniformity preserving; conservation fails (use the override to "
        "demonstrate)");

  PolarResult out;
  bool partial = false;

  if (cfg.mode == RunMode::Exhaustive) {
    if (cfg.depth > 22) throw SizeCapExceeded("exhaustive depth capped at 22");
    const std::size_t leaves = std::size_t{1} << cfg.depth;
    out.records.assign(leaves, PolarRecord{});
    unsigned split = 0;
    while ((1u << split) < cfg.threads && split < cfg.depth) ++split;
    std::atomic<bool> aborted{false};
    SignSeq prefix;
    try {
      detail::expand_tree(canonicalize(w), op, cfg, prefix, 0, split, out.records, hook, aborted);
    } catch (const BudgetExceeded&) {
      partial = true;
      std::vector<PolarRecord> done;
      for (auto& r : out.records)
        if (r.outputs != 0) done.push_back(std::move(r));
      out.records = std::move(done);
      if (out.records.empty()) throw;
    }
  } else {
    if (cfg.samples == 0) throw Error("Monte-Carlo mode needs a sample count");
    out.records.assign(cfg.samples, PolarRecord{});
    std::atomic<bool> aborted{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p) {
        if (aborted.load(std::memory_order_relaxed)) return;
        try {
          SplitMix64 g(derive_stream(cfg.seed, p));
          SignSeq seq(cfg.depth);
          for (auto& s : seq) s = (g.next() & 1) ? Sign::Plus : Sign::Minus;
          Channel leaf = transform_seq(w, op, seq, cfg.budget);
          out.records[p] = detail::make_record(std::move(seq), leaf, cfg);
        } catch (...) {
          std::scoped_lock lk(error_mutex);
          if (!first_error) first_error = std::current_exception();
          aborted.store(true, std::memory_order_relaxed);
          return;
        }
      }
    };
    unsigned nthreads = std::max(1u, cfg.threads);
    if (nthreads == 1) {
      worker(0, cfg.samples);
    } else {
      std::vector<std::future<void>> futs;
      std::size_t chunk = (cfg.samples + nthreads - 1) / nthreads;
      for (unsigned t = 0; t < nthreads; ++t) {
        std::size_t b = std::min<std::size_t>(t * chunk, cfg.samples);
        std::size_t e = std::min<std::size_t>(b + chunk, cfg.samples);
        if (b < e) futs.push_back(std::async(std::launch::async, worker, b, e));
      }
      for (auto& f : futs) f.get();
    }
    if (first_error) {
      partial = true;
      std::vector<PolarRecord> done;
      for (auto& r : out.records)
        if (r.outputs != 0) done.push_back(std::move(r));
      out.records = std::move(done);
      if (out.records.empty()) std::rethrow_exception(first_error);
    }
  }

  out.summary =
      detail::summarize(out.records, w.input_size(), cfg.histogram_width, partial);
  return out;
}

// --- inequality verification --------------------------------------------------

struct BhattLemmaReport {
  // Slack conventions: positive slack = inequality satisfied with margin.
  double worst_minus_slack = 0.0;  // min over pairs/v of Z(W-_{u,u'}) - Z(W_{u*v,u'*v})/|X|
  double worst_plus_gap = 0.0;     // max |identity lhs - rhs| over pairs
  double worst_seq_slack = 0.0;    // min over s of Z_min(W^s) - bound(s)
  std::size_t sequences_checked = 0;
  bool ok = true;
};

// Checks the pairwise-parameter inequalities of the two single-step
// transforms and the multi-step lower bound on Z_min for every sign sequence
// up to the given depth.
inline BhattLemmaReport verify_bhatt_lemmas(const Channel& w, const CayleyTable& op,
                                            std::size_t depth,
                                            const TransformOptions& opts = {}) {
  if (!is_uniformity_preserving(op))
    throw NotUniformityPreserving("lemma verification requires uniformity preservation");
  if (depth > 4) throw SizeCapExceeded("lemma verification depth capped at 4");
  const std::size_t n = w.input_size();
  BhattLemmaReport rep;

  Channel base = canonicalize(w);
  auto zmat = bhattacharyya_matrix(base);
  Channel minus = minus_transform(base, op, opts);
  Channel plus = plus_transform(base, op, opts);
  auto zminus = bhattacharyya_matrix(minus);
  auto zplus = bhattacharyya_matrix(plus);

  auto ap = [&](std::size_t a, std::size_t b) {
    return static_cast<std::size_t>(op.apply(static_cast<int>(a), static_cast<int>(b)));
  };

  double minus_slack = 2.0;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t up = 0; up < n; ++up)
      for (std::size_t v = 0; v < n; ++v) {
        double rhs = zmat[ap(u, v)][ap(up, v)] / static_cast<double>(n);
        minus_slack = std::min(minus_slack, zminus[u][up] - rhs);
      }
  rep.worst_minus_slack = minus_slack;

  double plus_gap = 0.0;
  for (std::size_t u2 = 0; u2 < n; ++u2)
    for (std::size_t v2 = 0; v2 < n; ++v2) {
      double rhs = 0.0;
      for (std::size_t u1 = 0; u1 < n; ++u1) rhs += zmat[ap(u1, u2)][ap(u1, v2)];
      rhs *= zmat[u2][v2] / static_cast<double>(n);
      plus_gap = std::max(plus_gap, std::abs(zplus[u2][v2] - rhs));
    }
  rep.worst_plus_gap = plus_gap;

  double z_min_base = bhattacharyya(base).z_min;
  double seq_slack = 2.0;
  for_each_transform_node(base, op, depth, opts, [&](const SignSeq& s, const Channel& node) {
    if (s.empty()) return;
    double bound = std::pow(z_min_base / static_cast<double>(n),
                            static_cast<double>(minus_count(s) + 1) *
                                std::pow(2.0, static_cast<double>(plus_count(s))));
    seq_slack = std::min(seq_slack, bhattacharyya(node).z_min - bound);
    ++rep.sequences_checked;
  });
  rep.worst_seq_slack = seq_slack;

  rep.ok = rep.worst_minus_slack >= -kInfoTol && rep.worst_plus_gap <= kInfoTol &&
           rep.worst_seq_slack >= -kInfoTol;
  return rep;
}

struct PropBhatReport {
  double worst_slack = 2.0;  // positive = all three inequalities hold with margin
  bool ok = true;
};

// The three capacity/error-probability inequalities tying Z to I and Pe.
inline PropBhatReport verify_capacity_bhatt_inequalities(const Channel& w) {
  const double n = static_cast<double>(w.input_size());
  double info = mutual_info(w);
  double pe = prob_error(w);
  double z = bhattacharyya(w).z;
  PropBhatReport rep;
  rep.worst_slack = std::min({(1.0 - info / std::log2(n)) - z * z,
                              info - std::log2(n / (1.0 + (n - 1.0) * z)),
                              pe - 0.25 * z * z, (n - 1.0) * z - pe});
  rep.ok = rep.worst_slack >= -kInfoTol;
  return rep;
}

// --- stable-partition level scan ------------------------------------------------

struct StableScanResult {
  std::size_t leaves = 0;
  // Fraction of leaves where one stable partition matches the projected
  // capacities of all stable partitions simultaneously.
  double fraction_all_projections = 0.0;
  // Weaker form: only the identity projection and the witness itself.
  double fraction_witness_only = 0.0;
};

inline StableScanResult stable_level_scan(const Channel& w, const CayleyTable& op,
                                          std::size_t depth, double delta,
                                          const TransformOptions& opts = {}) {
  if (!is_uniformity_preserving(op))
    throw NotUniformityPreserving("level scan requires uniformity preservation");
  auto stables = enumerate_stable_partitions(inverse_op(op));
  const std::size_t count = stables.size();
  // rhs[h][hp] = log2(|H_h| * ||H_h ^ H_hp|| / ||H_hp||)
  std::vector<std::vector<double>> rhs(count, std::vector<double>(count));
  for (std::size_t a = 0; a < count; ++a)
    for (std::size_t b = 0; b < count; ++b) {
      double wedge = static_cast<double>(meet(stables[a], stables[b]).block_size());
      rhs[a][b] = std::log2(static_cast<double>(stables[a].block_count()) * wedge /
                            static_cast<double>(stables[b].block_size()));
    }

  StableScanResult res;
  std::size_t hits_all = 0, hits_weak = 0;
  for_each_transform_node(w, op, depth, opts, [&](const SignSeq& s, const Channel& node) {
    if (s.size() != depth) return;
    ++res.leaves;
    std::vector<double> proj_info(count);
    for (std::size_t b = 0; b < count; ++b)
      proj_info[b] = mutual_info(project_channel(node, stables[b]));
    double info = mutual_info(node);
    bool any_all = false, any_weak = false;
    for (std::size_t a = 0; a < count && !(any_all && any_weak); ++a) {
      bool all_ok = true;
      for (std::size_t b = 0; b < count && all_ok; ++b)
        all_ok = std::abs(proj_info[b] - rhs[a][b]) < delta;
      any_all = any_all || all_ok;
      double levels = std::log2(static_cast<double>(stables[a].block_count()));
      any_weak = any_weak || (std::abs(info - levels) < delta &&
                              std::abs(proj_info[a] - levels) < delta);
    }
    hits_all += any_all;
    hits_weak += any_weak;
  });
  if (res.leaves) {
    res.fraction_all_projections = static_cast<double>(hits_all) / static_cast<double>(res.leaves);
    res.fraction_witness_only = static_cast<double>(hits_weak) / static_cast<double>(res.leaves);
  }
  return res;
}

}  // namespace polarlab
