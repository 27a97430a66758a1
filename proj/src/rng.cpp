#include "poisonguard/rng.hpp"

#include <algorithm>

namespace pg::rng {

std::uint64_t Stream::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t Stream::bounded(std::uint64_t n) {
  if (n == 0) return 0;
  __uint128_t m = static_cast<__uint128_t>(next()) * n;
  std::uint64_t lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    std::uint64_t threshold = (0ULL - n) % n;
    while (lo < threshold) {
      m = static_cast<__uint128_t>(next()) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Stream::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

Stream derive(std::uint64_t seed, std::string_view tag) {
  return Stream(seed ^ fnv1a64(tag));
}

std::vector<std::size_t> sample_indices(Stream& stream, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  // Partial Fisher-Yates: the first k slots end up with the sample.
  for (std::size_t i = 0; i < k && i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(stream.bounded(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(std::min(k, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace pg::rng
