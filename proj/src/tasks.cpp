#include "pgfn/tasks.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pgfn/error.hpp"

namespace pgfn {

int levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<int> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      int up = row[j];
      int sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

// ---------------------------------------------------------------------------

double bitseq_reward(const BitSeqSpec& spec, std::string_view x) {
  int best = std::numeric_limits<int>::max();
  for (const auto& m : spec.modes) best = std::min(best, levenshtein(x, m));
  return std::exp(-static_cast<double>(best));
}

int default_mode_distance(int n) {
  return static_cast<int>(std::lround(28.0 * n / 120.0));
}

BitSeqEnv::BitSeqEnv(BitSeqSpec spec) : spec_(std::move(spec)) {
  if (spec_.k < 1 || spec_.k > 16 || spec_.n < spec_.k || spec_.n % spec_.k != 0)
    throw Error(Errc::BadSpec, "bitseq requires 1 <= k <= 16 and k | n");
  if (spec_.modes.empty()) throw Error(Errc::BadSpec, "bitseq requires at least one mode");
  for (const auto& m : spec_.modes) {
    if (static_cast<int>(m.size()) != spec_.n ||
        m.find_first_not_of("01") != std::string::npos)
      throw Error(Errc::BadSpec, "mode '" + m + "' is not a bit string of length n");
  }
  positions_ = spec_.n / spec_.k;
}

std::string BitSeqEnv::signature() const {
  std::ostringstream os;
  os << "bitseq(n=" << spec_.n << ",k=" << spec_.k << ",modes=" << spec_.modes.size()
     << ")";
  return os.str();
}

State BitSeqEnv::initial() const { return State{std::vector<int>(positions_, -1), 0}; }

std::vector<Action> BitSeqEnv::valid_actions(const State& s) const {
  std::vector<Action> out;
  if (is_terminal(s)) return out;
  for (int w = 0; w < n_astar(); ++w)
    for (int p = 0; p < positions_; ++p)
      if (s.cells[p] < 0) out.push_back({w, p});
  return out;
}

bool BitSeqEnv::is_valid(const State& s, Action a) const {
  return a.astar >= 0 && a.astar < n_astar() && a.aprime >= 0 &&
         a.aprime < positions_ && s.cells[a.aprime] < 0;
}

std::string BitSeqEnv::word_bits(int word) const {
  std::string out(spec_.k, '0');
  for (int b = 0; b < spec_.k; ++b)
    if (word & (1 << (spec_.k - 1 - b))) out[b] = '1';
  return out;
}

std::string BitSeqEnv::to_string(const State& s) const {
  std::string out;
  out.reserve(spec_.n);
  for (int c : s.cells) out += c < 0 ? std::string(spec_.k, '.') : word_bits(c);
  return out;
}

State BitSeqEnv::from_bits(std::string_view bits) const {
  if (static_cast<int>(bits.size()) != spec_.n)
    throw Error(Errc::BadSpec, "bit string length");
  State s{std::vector<int>(positions_, 0), positions_};
  for (int p = 0; p < positions_; ++p) {
    int w = 0;
    for (int b = 0; b < spec_.k; ++b) {
      char c = bits[p * spec_.k + b];
      if (c != '0' && c != '1') throw Error(Errc::BadSpec, "non-bit character");
      w = (w << 1) | (c == '1');
    }
    s.cells[p] = w;
  }
  return s;
}

State BitSeqEnv::do_apply(const State& s, Action a) const {
  State out = s;
  out.cells[a.aprime] = a.astar;
  ++out.depth;
  return out;
}

std::vector<Parent> BitSeqEnv::do_parents(const State& s) const {
  std::vector<Parent> out;
  for (int p = 0; p < positions_; ++p) {
    if (s.cells[p] < 0) continue;
    State parent = s;
    parent.cells[p] = -1;
    --parent.depth;
    out.push_back({std::move(parent), Action{s.cells[p], p}});
  }
  return out;
}

double BitSeqEnv::do_reward(const State& x) const { return bitseq_reward(spec_, to_string(x)); }

const std::vector<std::string>& paper_basis() {
  static const std::vector<std::string> basis = {"10100101", "11111111", "11110000",
                                                 "00001111", "00111100"};
  return basis;
}

std::vector<std::string> synth_modes(const std::vector<std::string>& basis, int count,
                                     int n, Rng& rng) {
  if (basis.empty() || count < 0) throw Error(Errc::BadSpec, "empty basis");
  const std::size_t width = basis.front().size();
  for (const auto& b : basis)
    if (b.size() != width || width == 0 || n % static_cast<int>(width) != 0)
      throw Error(Errc::BadSpec, "basis string length must divide n");
  const int blocks = n / static_cast<int>(width);
  std::set<std::string> distinct_basis(basis.begin(), basis.end());
  double capacity = std::pow(static_cast<double>(distinct_basis.size()), blocks);
  if (capacity < count)
    throw Error(Errc::Exhausted, "basis cannot produce " + std::to_string(count) +
                                     " distinct modes");
  std::vector<std::string> modes;
  std::set<std::string> seen;
  const long max_attempts = 1000L * (count + 1);
  for (long attempt = 0; static_cast<int>(modes.size()) < count; ++attempt) {
    if (attempt > max_attempts) throw Error(Errc::Exhausted, "too many duplicate draws");
    std::string m;
    m.reserve(n);
    for (int b = 0; b < blocks; ++b) m += basis[rng.below(basis.size())];
    if (seen.insert(m).second) modes.push_back(std::move(m));
  }
  return modes;
}

std::vector<std::string> load_modes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open modes file " + path);
  std::vector<std::string> modes;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
      line.pop_back();
    if (!line.empty()) modes.push_back(line);
  }
  return modes;
}

// ---------------------------------------------------------------------------

std::unordered_map<std::string, double> load_reward_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open reward table " + path);
  std::unordered_map<std::string, double> table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line == "sequence,reward") continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw Error(Errc::ParseError, path + ":" + std::to_string(lineno) + ": missing comma");
    try {
      table[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, path + ":" + std::to_string(lineno) + ": bad reward");
    }
  }
  return table;
}

PamdpEnv::PamdpEnv(PamdpSpec spec) : spec_(std::move(spec)) {
  if (spec_.length < 1) throw Error(Errc::BadSpec, "pamdp length must be >= 1");
  if (spec_.reward_floor && !(*spec_.reward_floor > 0.0))
    throw Error(Errc::BadSpec, "reward floor must be positive");
  for (const auto& [seq, r] : spec_.reward_table) {
    if (static_cast<int>(seq.size()) != spec_.length ||
        seq.find_first_not_of(kAlphabet) != std::string::npos)
      throw Error(Errc::BadSpec, "reward table key '" + seq + "' is not a terminal");
    if (!(r > 0.0) || !std::isfinite(r))
      throw Error(Errc::BadSpec, "reward for '" + seq + "' must be positive");
  }
  if (!spec_.reward_floor && !spec_.surrogate) {
    // Keys are validated distinct terminals, so full coverage is a count check.
    double terminals = std::pow(4.0, spec_.length);
    if (static_cast<double>(spec_.reward_table.size()) < terminals)
      throw Error(Errc::MissingReward,
                  "reward table covers " + std::to_string(spec_.reward_table.size()) +
                      " terminals and no floor is configured");
  }
}

std::string PamdpEnv::signature() const {
  return "pamdp(length=" + std::to_string(spec_.length) + ")";
}

namespace {
bool all_equal_to(const std::vector<int>& cells, int token) {
  return std::all_of(cells.begin(), cells.end(), [&](int c) { return c == token; });
}
}  // namespace

bool PamdpEnv::is_valid(const State& s, Action a) const {
  if (is_terminal(s) || a.astar < 0 || a.astar >= 4) return false;
  if (a.aprime == kAppend) return true;
  // Prepending t to t...t equals appending it; only the append form exists.
  return a.aprime == kPrepend && !all_equal_to(s.cells, a.astar);
}

std::vector<Action> PamdpEnv::valid_actions(const State& s) const {
  std::vector<Action> out;
  if (is_terminal(s)) return out;
  for (int t = 0; t < 4; ++t)
    for (int side : {kPrepend, kAppend})
      if (is_valid(s, {t, side})) out.push_back({t, side});
  return out;
}

std::string PamdpEnv::to_string(const State& s) const {
  std::string out;
  for (int c : s.cells) out += kAlphabet[c];
  return out;
}

State PamdpEnv::from_string(std::string_view seq) const {
  State s;
  for (char c : seq) {
    auto pos = kAlphabet.find(c);
    if (pos == std::string_view::npos) throw Error(Errc::BadSpec, "bad nucleotide");
    s.cells.push_back(static_cast<int>(pos));
  }
  s.depth = static_cast<int>(s.cells.size());
  return s;
}

State PamdpEnv::do_apply(const State& s, Action a) const {
  State out = s;
  if (a.aprime == kPrepend)
    out.cells.insert(out.cells.begin(), a.astar);
  else
    out.cells.push_back(a.astar);
  ++out.depth;
  return out;
}

std::vector<Parent> PamdpEnv::do_parents(const State& s) const {
  std::vector<Parent> out;
  State front{std::vector<int>(s.cells.begin() + 1, s.cells.end()), s.depth - 1};
  if (!all_equal_to(front.cells, s.cells.front()))
    out.push_back({std::move(front), Action{s.cells.front(), kPrepend}});
  State back{std::vector<int>(s.cells.begin(), s.cells.end() - 1), s.depth - 1};
  out.push_back({std::move(back), Action{s.cells.back(), kAppend}});
  return out;
}

double PamdpEnv::do_reward(const State& x) const {
  std::string key = to_string(x);
  if (auto it = spec_.reward_table.find(key); it != spec_.reward_table.end())
    return it->second;
  if (spec_.surrogate) {
    double r = spec_.surrogate(key);
    if (spec_.reward_floor) r = std::max(r, *spec_.reward_floor);
    return r;
  }
  if (spec_.reward_floor) return *spec_.reward_floor;
  throw Error(Errc::MissingReward, key);
}

// ---------------------------------------------------------------------------

ToyTreeEnv::ToyTreeEnv(ToyTreeSpec spec) : spec_(std::move(spec)) {
  if (spec_.branching < 2 || spec_.depth < 1)
    throw Error(Errc::BadSpec, "toytree requires branching >= 2 and depth >= 1");
  if (!spec_.rewards.empty()) {
    double leaves = std::pow(static_cast<double>(spec_.branching), spec_.depth);
    if (static_cast<double>(spec_.rewards.size()) != leaves)
      throw Error(Errc::BadSpec, "toytree rewards must list every leaf");
    for (double r : spec_.rewards)
      if (!(r > 0.0)) throw Error(Errc::BadSpec, "toytree rewards must be positive");
  } else if (spec_.reward_fn != "constant" && spec_.reward_fn != "linear" &&
             spec_.reward_fn != "peaked") {
    throw Error(Errc::BadSpec, "unknown toytree reward_fn '" + spec_.reward_fn + "'");
  }
}

std::string ToyTreeEnv::signature() const {
  return "toytree(branching=" + std::to_string(spec_.branching) +
         ",depth=" + std::to_string(spec_.depth) + ")";
}

std::vector<Action> ToyTreeEnv::valid_actions(const State& s) const {
  std::vector<Action> out;
  if (is_terminal(s)) return out;
  for (int c = 0; c < spec_.branching; ++c) out.push_back({c, 0});
  return out;
}

bool ToyTreeEnv::is_valid(const State& s, Action a) const {
  return !is_terminal(s) && a.aprime == 0 && a.astar >= 0 && a.astar < spec_.branching;
}

std::string ToyTreeEnv::to_string(const State& s) const {
  std::string out = "/";
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(s.cells[i]);
  }
  return out;
}

std::size_t ToyTreeEnv::leaf_index(const State& x) const {
  std::size_t idx = 0;
  for (int c : x.cells) idx = idx * spec_.branching + static_cast<std::size_t>(c);
  return idx;
}

State ToyTreeEnv::do_apply(const State& s, Action a) const {
  State out = s;
  out.cells.push_back(a.astar);
  ++out.depth;
  return out;
}

std::vector<Parent> ToyTreeEnv::do_parents(const State& s) const {
  State parent{std::vector<int>(s.cells.begin(), s.cells.end() - 1), s.depth - 1};
  return {Parent{std::move(parent), Action{s.cells.back(), 0}}};
}

double ToyTreeEnv::do_reward(const State& x) const {
  if (!spec_.rewards.empty()) return spec_.rewards[leaf_index(x)];
  if (spec_.reward_fn == "constant") return 1.0;
  if (spec_.reward_fn == "linear") return 1.0 + static_cast<double>(leaf_index(x));
  int nonzero = static_cast<int>(std::count_if(x.cells.begin(), x.cells.end(),
                                               [](int c) { return c != 0; }));
  return std::exp(-static_cast<double>(nonzero)) + 0.01;
}

}  // namespace pgfn
