#include "core/rng.hpp"

#include "core/errors.hpp"

namespace d3fcnn {

namespace {

// splitmix64 finalizer; good avalanche for seed mixing.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace

Rng Rng::stream(std::string_view name) const {
  return Rng(mix64(seed_ ^ mix64(fnv1a(name))));
}

std::int64_t Rng::uniform_int(std::int64_t n) {
  if (n <= 0) throw ShapeError("Rng::uniform_int: n must be positive");
  const std::uint64_t un = std::uint64_t(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return std::int64_t(x % un);
}

} // namespace d3fcnn
