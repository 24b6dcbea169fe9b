#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polarlab/cayley.hpp"
#include "polarlab/partition.hpp"

namespace polarlab {

struct OpClassification {
  bool uniformity_preserving = false;
  bool irreducible = false;
  bool ergodic = false;
  bool quasigroup = false;
  bool inverse_strongly_ergodic = false;
  bool polarizing = false;
  bool zero_exponent_condition = false;
  std::optional<std::size_t> scon_estimate;  // for the inverse operation

  // Witnesses for negative verdicts on the operation itself.
  std::optional<std::vector<int>> invariant_set;
  std::optional<std::vector<std::vector<int>>> cyclic_classes;

  // Which procedure decided inverse strong ergodicity: "reachability" for
  // sizes within the reachability cap, "residue" beyond it.
  std::string inverse_decision;
};

inline OpClassification classify(const CayleyTable& op) {
  OpClassification c;
  c.uniformity_preserving = is_uniformity_preserving(op);
  auto erg = ergodicity(op);
  c.irreducible = erg.irreducible;
  c.ergodic = erg.ergodic;
  c.invariant_set = erg.invariant_set;
  c.cyclic_classes = erg.cyclic_classes;
  c.quasigroup = is_quasigroup(op);
  c.zero_exponent_condition = zero_exponent_predicate(op);

  if (c.uniformity_preserving) {
    CayleyTable inv = inverse_op(op);
    if (op.size() <= kMaxReachabilitySize) {
      auto se = is_strongly_ergodic(inv);
      c.inverse_strongly_ergodic = se.strongly_ergodic;
      c.scon_estimate = se.scon_estimate;
      c.inverse_decision = "reachability";
    } else {
      c.inverse_strongly_ergodic = is_ergodic(inv) && residue_check(inv);
      c.inverse_decision = "residue";
    }
  }
  c.polarizing = c.uniformity_preserving && c.inverse_strongly_ergodic;
  return c;
}

}  // namespace polarlab
