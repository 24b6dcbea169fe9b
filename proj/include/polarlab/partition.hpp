#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "polarlab/cayley.hpp"
#include "polarlab/common.hpp"

namespace polarlab {

// Partition of {0..n-1} in canonical form: blocks internally sorted and
// ordered by their minimum element, so equality and ordering are plain
// lexicographic comparisons.
class Partition {
 public:
  Partition(std::size_t ground, std::vector<std::vector<int>> blocks)
      : ground_(ground), blocks_(std::move(blocks)) {
    std::vector<bool> seen(ground_, false);
    std::size_t covered = 0;
    for (auto& b : blocks_) {
      if (b.empty()) throw NotAPartition("empty block");
      std::sort(b.begin(), b.end());
      for (int x : b) {
        if (x < 0 || static_cast<std::size_t>(x) >= ground_)
          throw NotAPartition("element out of range");
        if (seen[x]) throw NotAPartition("overlapping blocks");
        seen[x] = true;
        ++covered;
      }
    }
    if (covered != ground_) throw NotAPartition("blocks do not cover the ground set");
    std::sort(blocks_.begin(), blocks_.end());
  }

  static Partition singletons(std::size_t n) {
    std::vector<std::vector<int>> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = {static_cast<int>(i)};
    return Partition(n, std::move(b));
  }

  static Partition whole(std::size_t n) {
    std::vector<int> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<int>(i);
    return Partition(n, {all});
  }

  std::size_t ground_size() const { return ground_; }
  std::size_t block_count() const { return blocks_.size(); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }

  bool balanced() const {
    for (const auto& b : blocks_)
      if (b.size() != blocks_[0].size()) return false;
    return true;
  }

  // Common block size; only meaningful for balanced partitions.
  std::size_t block_size() const { return blocks_[0].size(); }

  // Index of the block containing x.
  std::size_t block_index_of(int x) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      if (std::binary_search(blocks_[i].begin(), blocks_[i].end(), x)) return i;
    throw PartitionMismatch("element outside ground set");
  }

  bool refines(const Partition& coarser) const {
    if (ground_ != coarser.ground_size()) return false;
    for (const auto& b : blocks_) {
      const auto& host = coarser.blocks()[coarser.block_index_of(b[0])];
      if (!std::includes(host.begin(), host.end(), b.begin(), b.end())) return false;
    }
    return true;
  }

  auto operator<=>(const Partition& o) const = default;

  // Text form "0,2|1,3".
  static Partition parse(std::string_view text, std::size_t ground) {
    std::vector<std::vector<int>> blocks;
    std::vector<int> cur;
    std::string num;
    auto flush_num = [&] {
      if (num.empty()) throw ParseError("malformed partition text");
      cur.push_back(std::stoi(num));
      num.clear();
    };
    for (char c : text) {
      if (c >= '0' && c <= '9') {
        num += c;
      } else if (c == ',') {
        flush_num();
      } else if (c == '|') {
        flush_num();
        blocks.push_back(std::move(cur));
        cur.clear();
      } else if (c != ' ') {
        throw ParseError(std::string("unexpected character '") + c + "' in partition text");
      }
    }
    flush_num();
    blocks.push_back(std::move(cur));
    return Partition(ground, std::move(blocks));
  }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      if (i) out += '|';
      for (std::size_t j = 0; j < blocks_[i].size(); ++j) {
        if (j) out += ',';
        out += std::to_string(blocks_[i][j]);
      }
    }
    return out;
  }

 private:
  std::size_t ground_;
  std::vector<std::vector<int>> blocks_;
};

// Common refinement.
inline Partition meet(const Partition& p1, const Partition& p2) {
  if (p1.ground_size() != p2.ground_size())
    throw PartitionMismatch("meet of partitions over different ground sets");
  std::vector<std::vector<int>> blocks;
  for (const auto& a : p1.blocks())
    for (const auto& b : p2.blocks()) {
      std::vector<int> inter;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
      if (!inter.empty()) blocks.push_back(std::move(inter));
    }
  return Partition(p1.ground_size(), std::move(blocks));
}

// The distribution uniform on one block, as a vector over the ground set.
inline std::vector<double> uniform_on_block(const Partition& p, std::size_t block_idx) {
  std::vector<double> d(p.ground_size(), 0.0);
  const auto& b = p.blocks()[block_idx];
  for (int x : b) d[x] = 1.0 / static_cast<double>(b.size());
  return d;
}

// Enumerates all partitions of {0..n-1} into blocks of one common size (any
// divisor of n), in deterministic order. The callback may return false to
// stop early.
inline void for_each_balanced_partition(std::size_t n,
                                        const std::function<bool(const Partition&)>& fn) {
  for (std::size_t d = 1; d <= n; ++d) {
    if (n % d != 0) continue;
    std::vector<std::vector<int>> blocks;
    std::vector<bool> used(n, false);
    bool stop = false;
    std::function<void()> rec = [&] {
      if (stop) return;
      std::size_t first = 0;
      while (first < n && used[first]) ++first;
      if (first == n) {
        if (!fn(Partition(n, blocks))) stop = true;
        return;
      }
      used[first] = true;
      std::vector<int> block{static_cast<int>(first)};
      std::function<void(std::size_t, std::size_t)> pick = [&](std::size_t start,
                                                               std::size_t need) {
        if (stop) return;
        if (need == 0) {
          blocks.push_back(block);
          rec();
          blocks.pop_back();
          return;
        }
        for (std::size_t x = start; x < n; ++x) {
          if (used[x]) continue;
          if (n - x < need) break;
          used[x] = true;
          block.push_back(static_cast<int>(x));
          pick(x + 1, need - 1);
          block.pop_back();
          used[x] = false;
        }
      };
      pick(first + 1, d - 1);
      used[first] = false;
    };
    rec();
    if (stop) return;
  }
}

inline std::vector<Partition> balanced_partitions(std::size_t n) {
  std::vector<Partition> out;
  for_each_balanced_partition(n, [&](const Partition& p) {
    out.push_back(p);
    return true;
  });
  return out;
}

// One step of the block-product construction: the family {A*B : A,B in P}.
// Throws NotAPartition unless the family is again a partition with the same
// block size.
inline Partition star_step(const CayleyTable& op, const Partition& p) {
  if (op.size() != p.ground_size())
    throw PartitionMismatch("operation and partition sizes differ");
  if (!p.balanced()) throw NotAPartition("star step requires a balanced partition");
  const std::size_t d = p.block_size();
  std::set<std::vector<int>> products;
  std::vector<bool> covered(op.size(), false);
  std::size_t covered_count = 0;
  for (const auto& a : p.blocks())
    for (const auto& b : p.blocks()) {
      std::set<int> prod;
      for (int x : a)
        for (int y : b) prod.insert(op.apply(x, y));
      if (prod.size() != d) throw NotAPartition("product set has wrong size");
      auto [it, inserted] = products.emplace(prod.begin(), prod.end());
      if (inserted) {
        for (int v : *it) {
          if (covered[v]) throw NotAPartition("product sets overlap");
          covered[v] = true;
          ++covered_count;
        }
      }
    }
  if (covered_count != op.size()) throw NotAPartition("product sets do not cover");
  return Partition(op.size(), {products.begin(), products.end()});
}

// The iterate sequence H, H*, H**, ... of a stable partition, stored up to
// the first repeat: iterates[t + p] == iterates[t] with minimal t and p.
struct StableIterates {
  Partition base;
  std::vector<Partition> iterates;
  std::size_t transient = 0;
  std::size_t period = 1;

  const Partition& at(std::size_t i) const {
    if (i < iterates.size()) return iterates[i];
    return iterates[transient + (i - transient) % period];
  }
};

inline std::optional<StableIterates> stable_iterates(const CayleyTable& op, const Partition& p) {
  if (!p.balanced()) return std::nullopt;
  std::vector<Partition> seq{p};
  std::map<Partition, std::size_t> seen{{p, 0}};
  for (;;) {
    Partition next = star_step(op, seq.back());
    auto it = seen.find(next);
    if (it != seen.end()) {
      StableIterates si{p, std::move(seq), it->second, 0};
      si.period = si.iterates.size() - si.transient;
      return si;
    }
    seen.emplace(next, seq.size());
    seq.push_back(std::move(next));
  }
}

inline std::optional<StableIterates> try_stable(const CayleyTable& op, const Partition& p) {
  try {
    return stable_iterates(op, p);
  } catch (const NotAPartition&) {
    return std::nullopt;
  }
}

inline bool is_stable(const CayleyTable& op, const Partition& p) {
  return try_stable(op, p).has_value();
}

inline std::vector<Partition> enumerate_stable_partitions(const CayleyTable& op) {
  if (op.size() > kMaxProductSize)
    throw SizeCapExceeded("stable partition enumeration capped at " +
                          std::to_string(kMaxProductSize));
  std::vector<Partition> out;
  for_each_balanced_partition(op.size(), [&](const Partition& p) {
    if (is_stable(op, p)) out.push_back(p);
    return true;
  });
  return out;
}

// First residue of a stable partition H: the stable refinement K of H with
// the smallest block size such that A*B lands on a single block of K* for
// every A in K, B in H. H itself always qualifies. Two distinct minimal
// candidates are reported as an error, never resolved silently.
inline Partition first_residue(const CayleyTable& op, const Partition& h) {
  if (!is_ergodic(op)) throw Error("first residue requires an ergodic operation");
  auto hs = try_stable(op, h);
  if (!hs) throw Error("first residue requires a stable partition");

  std::vector<Partition> candidates;
  for (const auto& k : enumerate_stable_partitions(op)) {
    if (!k.refines(h)) continue;
    Partition kstar = star_step(op, k);
    std::set<std::vector<int>> kstar_blocks(kstar.blocks().begin(), kstar.blocks().end());
    bool absorbed = true;
    for (const auto& a : k.blocks()) {
      for (const auto& b : h.blocks()) {
        std::set<int> prod;
        for (int x : a)
          for (int y : b) prod.insert(op.apply(x, y));
        if (!kstar_blocks.count(std::vector<int>(prod.begin(), prod.end()))) {
          absorbed = false;
          break;
        }
      }
      if (!absorbed) break;
    }
    if (absorbed) candidates.push_back(k);
  }

  std::size_t best = op.size() + 1;
  for (const auto& k : candidates) best = std::min(best, k.block_size());
  std::vector<Partition> minimal;
  for (const auto& k : candidates)
    if (k.block_size() == best) minimal.push_back(k);
  if (minimal.empty()) throw Error("no residue candidate found");  // unreachable: H qualifies
  if (minimal.size() > 1)
    throw AmbiguousResidue("two residue candidates share block size " + std::to_string(best));
  return minimal[0];
}

// Diagnostic cross-check: every stable partition must be its own residue.
inline bool residue_check(const CayleyTable& op) {
  if (!is_ergodic(op)) throw Error("residue check requires an ergodic operation");
  for (const auto& h : enumerate_stable_partitions(op))
    if (!(first_residue(op, h) == h)) return false;
  return true;
}

struct StrongErgodicity {
  bool strongly_ergodic = false;
  std::optional<std::size_t> scon_estimate;
};

// Reachability decision. For every stable partition L and start x, evolve
// the collection of exactly-reachable subsets R_{i+1} = {S*B : S in R_i,
// B in L^{i*}}; the joint state (collection, iterate position) is finite, so
// its cycle is detected by hashing. Strong ergodicity holds iff inside every
// such cycle the collection contains every block of the current iterate.
// The reported estimate is the earliest step from which full reach holds for
// all L and x.
inline StrongErgodicity is_strongly_ergodic(const CayleyTable& op) {
  const std::size_t n = op.size();
  if (n > kMaxReachabilitySize)
    throw SizeCapExceeded("reachability decision capped at " +
                          std::to_string(kMaxReachabilitySize));
  if (!is_ergodic(op)) return {false, std::nullopt};

  auto blocks_to_masks = [](const Partition& p) {
    std::vector<std::uint32_t> masks;
    masks.reserve(p.block_count());
    for (const auto& b : p.blocks()) {
      std::uint32_t m = 0;
      for (int x : b) m |= (1u << x);
      masks.push_back(m);
    }
    std::sort(masks.begin(), masks.end());
    return masks;
  };

  // {s*b : s in S, b in B} as a mask transform
  auto mask_times_block = [&](std::uint32_t s, std::uint32_t block_mask) {
    std::uint32_t out = 0;
    for (std::size_t x = 0; x < n; ++x) {
      if (!(s & (1u << x))) continue;
      for (std::size_t b = 0; b < n; ++b)
        if (block_mask & (1u << b))
          out |= (1u << op.apply(static_cast<int>(x), static_cast<int>(b)));
    }
    return out;
  };

  std::size_t scon = 0;
  for (const auto& l : enumerate_stable_partitions(op)) {
    auto iters = stable_iterates(op, l);
    std::vector<std::vector<std::uint32_t>> iter_masks;
    for (const auto& it : iters->iterates) iter_masks.push_back(blocks_to_masks(it));
    auto iter_pos = [&](std::size_t step) {
      return step < iter_masks.size()
                 ? step
                 : iters->transient + (step - iters->transient) % iters->period;
    };

    for (std::size_t x = 0; x < n; ++x) {
      std::vector<std::uint32_t> r{1u << x};
      std::map<std::pair<std::vector<std::uint32_t>, std::size_t>, std::size_t> seen;
      std::vector<bool> full_at;
      std::size_t step = 0;
      for (;;) {
        std::size_t pos = iter_pos(step);
        auto key = std::make_pair(r, pos);
        auto it = seen.find(key);
        if (it != seen.end()) {
          // steps [it->second, step) repeat forever
          for (std::size_t i = it->second; i < step; ++i)
            if (!full_at[i]) return {false, std::nullopt};
          std::size_t first_full = step;
          while (first_full > 0 && full_at[first_full - 1]) --first_full;
          scon = std::max(scon, first_full);
          break;
        }
        seen.emplace(std::move(key), step);
        const auto& targets = iter_masks[pos];
        bool full = std::includes(r.begin(), r.end(), targets.begin(), targets.end());
        full_at.push_back(full);
        // successors
        std::set<std::uint32_t> next;
        for (std::uint32_t s : r)
          for (std::uint32_t bm : targets) next.insert(mask_times_block(s, bm));
        r.assign(next.begin(), next.end());
        ++step;
      }
    }
  }
  return {true, scon};
}

}  // namespace polarlab
