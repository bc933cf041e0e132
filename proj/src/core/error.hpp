#pragma once

#include <stdexcept>
#include <string>

namespace mrpe {

enum class Errc {
  kInvalidArgument = 1,
  kRowNotStochastic,
  kDiscountOutOfRange,
  kRewardOutOfBox,
  kSingularSystem,
  kIndexOutOfRange,
  kShapeMismatch,
  kInfeasible,
  kUnbounded,
  kIterationLimit,
  kInvalidDelta,
  kKTooLarge,
  kEmptySample,
  kAllZeroComplexity,
  kIo,
  kParse,
  kConfig,
};

// Every failure raised by the core carries one of the codes above; the C API
// maps them one-to-one onto mrpe_status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mrpe
