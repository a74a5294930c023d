#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace synlabel {

// SplitMix64 finalizer; bijective 64-bit mixer.
constexpr std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based random stream.
//
// The i-th output of a stream is a pure function of (key, i), and child
// streams are derived from (key, index) without touching the parent's
// counter. Work that is split over instances, draws or trees derives one
// child per unit, so results do not depend on evaluation order or on the
// number of worker threads.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : key_(Mix64(seed ^ 0x5851F42D4C957F2DULL)) {}

  // Child stream for `index`. Independent of how many values the parent drew.
  Stream Derive(std::uint64_t index) const {
    Stream child(0);
    child.key_ = Mix64(key_ ^ Mix64(index + 0x632BE59BD9B4E019ULL));
    return child;
  }

  Stream Derive(std::initializer_list<std::uint64_t> path) const {
    Stream s = *this;
    for (std::uint64_t index : path) s = s.Derive(index);
    return s;
  }

  std::uint64_t NextU64() {
    ++counter_;
    return Mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Unbiased (Lemire's multiply-and-reject).
  std::size_t UniformIndex(std::size_t n);

  // Standard normal via Box-Muller. Uses two uniforms per call.
  double Normal();

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Seed for a sub-task (stage, run, tree) of a master seed, as a plain integer
// so it can be recorded in provenance.
inline std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index) {
  return Mix64(Mix64(master) + Mix64(index ^ 0xD1B54A32D192ED03ULL));
}

}  // namespace synlabel
