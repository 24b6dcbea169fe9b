#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace polarlab {

// Size caps keeping exhaustive searches (subset closures, partition
// enumeration, reachability states) at desk scale. All are plain constants;
// callers that need a different budget pass one explicitly where the API
// allows it.
inline constexpr std::size_t kMaxSingleOpSize = 10;
inline constexpr std::size_t kMaxProductSize = 16;
inline constexpr std::size_t kMaxReachabilitySize = 8;
inline constexpr std::size_t kMaxUnrestrictedEasinessSize = 12;
inline constexpr std::size_t kDefaultOutputBudget = 20000;
inline constexpr std::size_t kRawOutputLimit = std::size_t{1} << 22;

inline constexpr double kRowSumTol = 1e-9;
inline constexpr double kInfoTol = 1e-9;
inline constexpr double kMergeTol = 1e-12;
inline constexpr double kEquivTol = 1e-9;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  using Error::Error;
};
struct NotUniformityPreserving : Error {
  using Error::Error;
};
struct NotAPartition : Error {
  using Error::Error;
};
struct SizeCapExceeded : Error {
  using Error::Error;
};
struct AmbiguousResidue : Error {
  using Error::Error;
};
struct BudgetExceeded : Error {
  using Error::Error;
};
struct FactorizationFailed : Error {
  using Error::Error;
};
struct PartitionMismatch : Error {
  using Error::Error;
};
struct SizeMismatch : Error {
  using Error::Error;
};
struct InputSizeMismatch : Error {
  using Error::Error;
};
struct InputTooSmall : Error {
  using Error::Error;
};
struct LengthNotPowerOfTwo : Error {
  using Error::Error;
};

}  // namespace polarlab
