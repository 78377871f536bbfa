#include "pgfn/region.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pgfn/error.hpp"

namespace pgfn {

RegionMask RegionMask::full(int n_astar, std::uint64_t id) {
  return RegionMask{std::vector<std::uint8_t>(static_cast<std::size_t>(n_astar), 1), id};
}

int RegionMask::popcount() const {
  return static_cast<int>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

RegionMask sample_bernoulli_region(int n_astar, const RegionConfig& cfg, Rng& rng,
                                   std::uint64_t id) {
  if (n_astar < 1) throw Error(Errc::BadSpec, "n_astar must be >= 1");
  if (!(cfg.p > 0.0 && cfg.p <= 1.0)) throw Error(Errc::BadSpec, "p must lie in (0, 1]");
  RegionMask mask{std::vector<std::uint8_t>(static_cast<std::size_t>(n_astar), 0), id};
  do {
    for (auto& v : mask.valid) v = rng.uniform() < cfg.p ? 1 : 0;
  } while (mask.popcount() == 0);
  return mask;
}

std::vector<Action> restrict_actions(const RegionMask& mask, std::span<const Action> actions) {
  std::vector<Action> out;
  out.reserve(actions.size());
  for (const Action& a : actions)
    if (mask.allows(a.astar)) out.push_back(a);
  if (out.empty() && !actions.empty())
    throw Error(Errc::DeadEnd, "region mask removes every available action");
  return out;
}

RegionMembership::RegionMembership(const Environment& env, const RegionMask& mask)
    : env_(env), mask_(mask) {}

bool RegionMembership::contains(const State& s) {
  if (s.depth == 0) return true;
  if (auto it = memo_.find(s); it != memo_.end()) return it->second;
  bool in = false;
  for (const Parent& p : env_.parents(s)) {
    if (mask_.allows(p.action.astar) && contains(p.state)) {
      in = true;
      break;
    }
  }
  memo_.emplace(s, in);
  return in;
}

bool region_contains(const Environment& env, const RegionMask& mask, const State& s) {
  RegionMembership membership(env, mask);
  return membership.contains(s);
}

double expected_ratio(double p, std::span<const double> sizes_by_depth) {
  double num = 0.0, den = 0.0, pl = 1.0;
  for (double size : sizes_by_depth) {
    num += pl * size;
    den += size;
    pl *= p;
  }
  if (!(den > 0.0)) throw Error(Errc::EmptySpace, "all depth sizes are zero");
  return num / den;
}

namespace {
void check_distribution(std::span<const double> q, int n, const char* name) {
  if (static_cast<int>(q.size()) != n)
    throw Error(Errc::BadDistribution, std::string(name) + " has wrong length");
  double total = 0.0;
  for (double v : q) {
    if (!(v >= 0.0)) throw Error(Errc::BadDistribution, std::string(name) + " is negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw Error(Errc::BadDistribution, std::string(name) + " does not sum to 1");
}
}  // namespace

OverlapStats overlap_stats(std::span<const double> p1, std::span<const double> p2, double p,
                           int n, int max_l, const RegionConfig& cfg, bool literal_union) {
  check_distribution(p1, n, "p1");
  check_distribution(p2, n, "p2");
  if (max_l < 1) throw Error(Errc::BadSpec, "max_l must be >= 1");

  const double nn = static_cast<double>(n);
  double q = 0.0;
  for (int i = 0; i < n; ++i) q += p1[i] * p2[i];

  OverlapStats out;
  out.expected_common = q * nn * nn * p * p;

  // term(l) = q^l n^l p^{2l}, the shared-draw factor of both set sums.
  auto shared = [&](int l) { return std::pow(q * nn * p * p, l); };
  double shared_sum = 0.0;
  for (int l = 1; l <= max_l; ++l) shared_sum += shared(l);

  double size_sum = 0.0;
  for (int l = 1; l <= max_l; ++l) {
    const double nl = std::pow(nn, l);
    const double pl = std::pow(p, l);
    out.expected_intersection += shared(l) * nl;
    out.expected_union += nl * (2.0 * pl - (literal_union ? shared_sum : shared(l)));
    size_sum += nl * pl;
  }
  out.indicator = cfg.alpha1 * out.expected_intersection / size_sum +
                  cfg.alpha2 * out.expected_union / size_sum;
  return out;
}

}  // namespace pgfn
