#pragma once

#include <cstdint>
#include <vector>

namespace ibmvar {

// Values on a contiguous integer range [lo, hi], zero outside. The supports
// of walk tallies and local-time profiles are always intervals, so a dense
// window is both the sparse map and the fast path.
template <class T>
class IndexedLine {
 public:
  IndexedLine() = default;
  IndexedLine(std::int64_t lo, std::vector<T> values)
      : lo_(lo), values_(std::move(values)) {}

  bool empty() const noexcept { return values_.empty(); }
  std::int64_t lo() const noexcept { return lo_; }
  std::int64_t hi() const noexcept {
    return lo_ + static_cast<std::int64_t>(values_.size()) - 1;
  }
  std::size_t size() const noexcept { return values_.size(); }

  T at(std::int64_t j) const {
    if (j < lo_ || j > hi()) return T{};
    return values_[static_cast<std::size_t>(j - lo_)];
  }

  // Mutable access; the window grows to include j.
  T& ref(std::int64_t j) {
    if (values_.empty()) {
      lo_ = j;
      values_.assign(1, T{});
    } else if (j < lo_) {
      values_.insert(values_.begin(), static_cast<std::size_t>(lo_ - j), T{});
      lo_ = j;
    } else if (j > hi()) {
      values_.resize(static_cast<std::size_t>(j - lo_ + 1), T{});
    }
    return values_[static_cast<std::size_t>(j - lo_)];
  }

  const std::vector<T>& values() const noexcept { return values_; }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      fn(lo_ + static_cast<std::int64_t>(i), values_[i]);
    }
  }

 private:
  std::int64_t lo_ = 0;
  std::vector<T> values_;
};

}  // namespace ibmvar
