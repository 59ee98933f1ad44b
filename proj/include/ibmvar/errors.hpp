#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ibmvar {

// Invalid argument or violated precondition.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configured resource limit (step count, memory) would be exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal invariant broken; always a bug, never silently repaired.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The fine path ended before the requested number of grid crossings.
class IncompleteSkeleton : public std::runtime_error {
 public:
  IncompleteSkeleton(std::int64_t achieved, std::int64_t requested)
      : std::runtime_error("incomplete skeleton: " + std::to_string(achieved) +
                           " of " + std::to_string(requested) +
                           " crossings found on the fine path"),
        achieved_(achieved),
        requested_(requested) {}

  std::int64_t achieved() const noexcept { return achieved_; }
  std::int64_t requested() const noexcept { return requested_; }

 private:
  std::int64_t achieved_;
  std::int64_t requested_;
};

}  // namespace ibmvar
