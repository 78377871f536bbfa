#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pgfn {

enum class Errc {
  IllegalAction,
  NoParent,
  NotTerminal,
  DeadEnd,
  EmptySpace,
  BadDistribution,
  ShapeMismatch,
  EmptyMask,
  NonFinite,
  EmptyBatch,
  DepthUnderflow,
  BadSpec,
  Exhausted,
  MissingReward,
  BudgetExceeded,
  ParseError,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pgfn
