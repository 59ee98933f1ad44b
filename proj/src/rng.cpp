#include "ibmvar/rng.hpp"

namespace ibmvar {

std::string_view to_string(Substream label) {
  switch (label) {
    case Substream::X: return "X";
    case Substream::Y: return "Y";
    case Substream::B: return "B";
    case Substream::B2: return "B2";
  }
  return "?";
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id,
                     Substream label) noexcept
    : master_seed_(master_seed), stream_id_(stream_id), label_(label) {
  std::uint64_t k = mix64(master_seed ^ 0x6A09E667F3BCC908ULL);
  k = mix64(k ^ stream_id);
  k = mix64(k ^ (0xA54FF53A5F1D36F1ULL + static_cast<std::uint64_t>(label)));
  key_ = k;
}

CounterEngine RngStream::engine(std::uint64_t lane) const noexcept {
  return CounterEngine(mix64(key_ ^ mix64(lane ^ 0x510E527FADE682D1ULL)));
}

double RngStream::normal_at(std::uint64_t lane, std::uint64_t index) const {
  CounterEngine e(mix64(engine(lane).key() ^ mix64(index)));
  return standard_normal(e);
}

}  // namespace ibmvar
