#include "pgfn/rng.hpp"

#include "pgfn/error.hpp"

namespace pgfn {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t root, std::string_view name,
                std::initializer_list<std::uint64_t> indices) {
  // FNV-1a over the name, then fold indices through splitmix64.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t seed = splitmix64(root ^ splitmix64(h));
  for (std::uint64_t i : indices) seed = splitmix64(seed ^ splitmix64(i + 1));
  return Rng(seed);
}

std::size_t Rng::below(std::size_t n) {
  auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::IllegalAction: return "IllegalAction";
    case Errc::NoParent: return "NoParent";
    case Errc::NotTerminal: return "NotTerminal";
    case Errc::DeadEnd: return "DeadEnd";
    case Errc::EmptySpace: return "EmptySpace";
    case Errc::BadDistribution: return "BadDistribution";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptyMask: return "EmptyMask";
    case Errc::NonFinite: return "NonFinite";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::DepthUnderflow: return "DepthUnderflow";
    case Errc::BadSpec: return "BadSpec";
    case Errc::Exhausted: return "Exhausted";
    case Errc::MissingReward: return "MissingReward";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::ParseError: return "ParseError";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace pgfn
