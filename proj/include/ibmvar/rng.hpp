#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

#include <boost/random/normal_distribution.hpp>

namespace ibmvar {

// One independent source per Brownian motion of the model.
enum class Substream : std::uint8_t { X = 0, Y = 1, B = 2, B2 = 3 };

std::string_view to_string(Substream label);

// SplitMix64 finalizer: a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based generator: output i is a pure function of (key, i).
// Satisfies UniformRandomBitGenerator.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  explicit CounterEngine(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return mix64(key_ ^ mix64(counter_++)); }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

inline double standard_normal(CounterEngine& engine) {
  // Ziggurat sampler; holds no state between calls.
  boost::random::normal_distribution<double> dist;
  return dist(engine);
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(CounterEngine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Random source keyed on (master_seed, stream_id, substream label). Lanes
// split a stream further into independent sequences; `normal_at` gives
// random access by (lane, index).
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id,
            Substream label) noexcept;

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  Substream label() const noexcept { return label_; }

  RngStream with_label(Substream label) const noexcept {
    return RngStream(master_seed_, stream_id_, label);
  }

  CounterEngine engine(std::uint64_t lane = 0) const noexcept;
  double normal_at(std::uint64_t lane, std::uint64_t index) const;

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  Substream label_;
  std::uint64_t key_;
};

// Maps signed indices to unsigned keys without collisions.
constexpr std::uint64_t zigzag(std::int64_t j) noexcept {
  return (static_cast<std::uint64_t>(j) << 1) ^
         static_cast<std::uint64_t>(j >> 63);
}

}  // namespace ibmvar
