#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace pgfn {

// Seeded random stream. Substreams are derived from a root seed plus a name
// and integer indices, so adding draws to one component never shifts another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t root, std::string_view name,
                    std::initializer_list<std::uint64_t> indices = {});

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace pgfn
