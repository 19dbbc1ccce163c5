#pragma once

#include <cmath>
#include <cstdint>

namespace twr {

// Counter-based splittable random stream. A stream is a 64-bit key; every
// draw is a pure function of (key, counter). Because no draw mutates state,
// draws can be evaluated in any order and from any thread and still produce
// identical values, which is what makes simulation results independent of
// the parallel schedule.
class StreamRng {
 public:
  StreamRng() = default;
  explicit StreamRng(uint64_t seed) : key_(finalize(seed ^ 0x8f3c1f9c2b4d5e6full)) {}

  uint64_t key() const { return key_; }

  // Child stream. derive(a) and derive(b) are statistically independent for
  // a != b, as are a parent and any of its children.
  StreamRng derive(uint64_t field) const {
    StreamRng child;
    child.key_ = finalize(key_ ^ finalize(field + 0xd1b54a32d192ed03ull));
    return child;
  }

  // Draw `counter` of this stream, a SplitMix64 output at that position.
  uint64_t bits(uint64_t counter) const {
    return finalize(key_ + (counter + 1) * 0x9e3779b97f4a7c15ull);
  }

  // Uniform on (0,1]; never returns 0 so log() stays finite.
  double uniform01(uint64_t counter) const {
    return ((bits(counter) >> 11) + 1) * 0x1.0p-53;
  }

  // Unit-mean exponential variate.
  double exponential(uint64_t counter) const { return -std::log(uniform01(counter)); }

 private:
  static uint64_t finalize(uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
  }

  uint64_t key_ = 0;
};

// Sequential adapter over StreamRng for call sites that just want "the next
// draw" instead of managing counters themselves.
class RngSequence {
 public:
  RngSequence() = default;
  explicit RngSequence(StreamRng stream) : stream_(stream) {}
  explicit RngSequence(uint64_t seed) : stream_(StreamRng(seed)) {}

  uint64_t bits() { return stream_.bits(next_++); }
  double uniform01() { return stream_.uniform01(next_++); }
  double exponential() { return stream_.exponential(next_++); }

  const StreamRng& stream() const { return stream_; }

 private:
  StreamRng stream_;
  uint64_t next_ = 0;
};

}  // namespace twr
