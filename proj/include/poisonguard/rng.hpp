#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace pg::rng {

// SplitMix64 stream. Used everywhere a seeded draw is needed so that runs
// replay byte-identically across platforms and standard-library versions
// (std:: distributions are implementation-defined).
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  // Uniform integer in [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t bounded(std::uint64_t n);

  // Uniform double in [0, 1).
  double uniform();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Independent substream for (seed, tag); tag is hashed in so that streams for
// different purposes do not overlap even with equal seeds.
Stream derive(std::uint64_t seed, std::string_view tag);

// k distinct indices drawn from [0, n), returned in ascending order.
std::vector<std::size_t> sample_indices(Stream& stream, std::size_t n, std::size_t k);

std::uint64_t fnv1a64(std::string_view data);

}  // namespace pg::rng
