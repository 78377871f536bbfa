#include "pgfn/harness.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pgfn/error.hpp"
#include "pgfn/oracle.hpp"

namespace pgfn {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& key, const std::string& what) {
  throw Error(Errc::ParseError, key + ": " + what);
}

// Walks one JSON object, remembering which keys were read so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) parse_fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const json* get(const std::string& k) {
    seen_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void read(const std::string& k, T& out) {
    const json* v = get(k);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v->is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer() && !v->is_number_unsigned())
          throw std::invalid_argument("expected an integer");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw std::invalid_argument("expected a string");
      }
      out = v->get<T>();
    } catch (const std::exception& e) {
      parse_fail(key(k), e.what());
    }
  }

  Section sub(const std::string& k) {
    const json* v = get(k);
    static const json empty = json::object();
    return Section(v ? *v : empty, key(k));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) parse_fail(key(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) parse_fail(key, what);
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.string();
}

void parse_task(Section s, TaskConfig& t, const std::filesystem::path& base) {
  std::string kind;
  s.read("kind", kind);
  if (kind == "bitseq") {
    t.kind = TaskKind::BitSeq;
    s.read("n", t.bitseq.n);
    s.read("k", t.bitseq.k);
    s.read("modes", t.bitseq.modes);
    s.read("modes_file", t.modes_file);
    s.read("n_modes", t.n_modes);
    s.read("basis", t.basis);
    s.read("mode_seed", t.mode_seed);
    t.bitseq.mode_distance = t.bitseq.n > 0 ? default_mode_distance(t.bitseq.n) : 0;
    s.read("mode_distance", t.bitseq.mode_distance);
    require(t.bitseq.mode_distance >= 0, s.key("mode_distance"), "must be >= 0");
    require(t.n_modes >= 1, s.key("n_modes"), "must be >= 1");
    if (!t.modes_file.empty()) t.modes_file = resolve(base, t.modes_file);
  } else if (kind == "pamdp") {
    t.kind = TaskKind::Pamdp;
    s.read("length", t.pamdp.length);
    s.read("reward_table", t.reward_table);
    double floor = 0.0;
    if (s.has("reward_floor")) {
      s.read("reward_floor", floor);
      require(floor > 0.0, s.key("reward_floor"), "must be > 0");
      t.pamdp.reward_floor = floor;
    }
    if (!t.reward_table.empty()) t.reward_table = resolve(base, t.reward_table);
  } else if (kind == "toytree") {
    t.kind = TaskKind::ToyTree;
    s.read("branching", t.toytree.branching);
    s.read("depth", t.toytree.depth);
    s.read("reward_fn", t.toytree.reward_fn);
    s.read("rewards", t.toytree.rewards);
  } else {
    parse_fail(s.key("kind"), "expected bitseq, pamdp or toytree");
  }
  s.finish();
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, e.what());
  }
  RunConfig cfg;
  Section s(root, "");
  require(s.has("task"), "task", "missing section");
  parse_task(s.sub("task"), cfg.task, base_dir);

  {
    Section o = s.sub("objective");
    std::string kind = "tb";
    o.read("kind", kind);
    try {
      cfg.objective.kind = parse_objective_kind(kind);
    } catch (const Error& e) {
      parse_fail(o.key("kind"), e.what());
    }
    o.read("lambda", cfg.objective.lambda);
    o.read("log_epsilon", cfg.objective.log_epsilon);
    require(cfg.objective.lambda > 0.0, o.key("lambda"), "must be > 0");
    require(cfg.objective.log_epsilon >= 0.0, o.key("log_epsilon"), "must be >= 0");
    o.finish();
  }
  {
    Section r = s.sub("region");
    r.read("p", cfg.region.p);
    std::string mode = "proportional";
    r.read("selection_mode", mode);
    if (mode == "proportional")
      cfg.region.selection_mode = SelectionMode::Proportional;
    else if (mode == "bernoulli")
      cfg.region.selection_mode = SelectionMode::Bernoulli;
    else
      parse_fail(r.key("selection_mode"), "expected proportional or bernoulli");
    r.read("alpha1", cfg.region.alpha1);
    r.read("alpha2", cfg.region.alpha2);
    require(cfg.region.p > 0.0 && cfg.region.p <= 1.0, r.key("p"), "must lie in (0, 1]");
    r.finish();
  }
  {
    Section l = s.sub("ls");
    l.read("K", cfg.ls.K);
    l.read("I", cfg.ls.I);
    l.read("batch", cfg.ls.m);
    require(cfg.ls.K >= 1, l.key("K"), "must be >= 1");
    require(cfg.ls.I >= 0, l.key("I"), "must be >= 0");
    require(cfg.ls.m >= 1, l.key("batch"), "must be >= 1");
    l.finish();
  }
  {
    Section p = s.sub("planner");
    p.read("min_steps", cfg.min_steps);
    std::string avg = "diff";
    p.read("avg_source", avg);
    if (avg == "diff")
      cfg.avg_source = AvgSource::Diff;
    else if (avg == "his")
      cfg.avg_source = AvgSource::His;
    else
      parse_fail(p.key("avg_source"), "expected diff or his");
    require(cfg.min_steps >= 0, p.key("min_steps"), "must be >= 0");
    p.finish();
  }
  {
    Section t = s.sub("train");
    t.read("iterations", cfg.iterations);
    t.read("lr", cfg.lr);
    t.read("lr_log_z", cfg.lr_log_z);
    t.read("seed", cfg.seed);
    t.read("eps_uniform", cfg.eps_uniform);
    t.read("hidden", cfg.hidden);
    require(cfg.iterations >= 0, t.key("iterations"), "must be >= 0");
    require(cfg.lr > 0.0, t.key("lr"), "must be > 0");
    require(cfg.lr_log_z > 0.0, t.key("lr_log_z"), "must be > 0");
    require(cfg.eps_uniform >= 0.0 && cfg.eps_uniform <= 1.0, t.key("eps_uniform"),
            "must lie in [0, 1]");
    for (int h : cfg.hidden) require(h >= 1, t.key("hidden"), "widths must be >= 1");
    t.finish();
  }
  {
    Section m = s.sub("metrics");
    m.read("topk", cfg.topk);
    m.read("reward_threshold", cfg.reward_threshold);
    require(cfg.topk >= 1, m.key("topk"), "must be >= 1");
    m.finish();
  }
  s.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

EnvPtr make_env(const RunConfig& cfg) {
  const TaskConfig& t = cfg.task;
  switch (t.kind) {
    case TaskKind::BitSeq: {
      BitSeqSpec spec = t.bitseq;
      if (spec.modes.empty() && !t.modes_file.empty()) spec.modes = load_modes(t.modes_file);
      if (spec.modes.empty()) {
        Rng rng = Rng::stream(t.mode_seed, "modes");
        spec.modes = synth_modes(t.basis.empty() ? paper_basis() : t.basis, t.n_modes, spec.n, rng);
      }
      return std::make_shared<BitSeqEnv>(std::move(spec));
    }
    case TaskKind::Pamdp: {
      PamdpSpec spec = t.pamdp;
      if (!t.reward_table.empty()) spec.reward_table = load_reward_table(t.reward_table);
      return std::make_shared<PamdpEnv>(std::move(spec));
    }
    case TaskKind::ToyTree:
      return std::make_shared<ToyTreeEnv>(t.toytree);
  }
  throw Error(Errc::BadSpec, "unknown task kind");
}

std::shared_ptr<ModeTracker> make_mode_tracker(const RunConfig& cfg, const Environment& env) {
  if (const auto* bs = dynamic_cast<const BitSeqEnv*>(&env))
    return std::make_shared<BitSeqModeTracker>(bs->spec().modes, bs->spec().mode_distance);
  return std::make_shared<ThresholdModeTracker>(cfg.reward_threshold);
}

Policy make_policy(const RunConfig& cfg, const Environment& env) {
  auto encoder = std::make_shared<SlotOneHotEncoder>(env);
  Rng rng = Rng::stream(cfg.seed, "init");
  NetShape shape{encoder->dim(), cfg.hidden, env.n_actions()};
  return Policy{std::move(encoder), PolicyParams::initialize(std::move(shape), rng)};
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig t;
  t.objective = cfg.objective;
  t.region = cfg.region;
  t.ls = cfg.ls;
  t.min_steps = cfg.min_steps;
  t.avg_source = cfg.avg_source;
  t.eps_uniform = cfg.eps_uniform;
  t.seed = cfg.seed;
  return t;
}

RunState make_run_state(const RunConfig& cfg) {
  EnvPtr env = make_env(cfg);
  Policy policy = make_policy(cfg, *env);
  auto modes = make_mode_tracker(cfg, *env);
  return make_run_state(env, std::move(policy), train_config(cfg), cfg.lr, cfg.lr_log_z,
                        std::move(modes), cfg.topk);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_row(const IterationMetrics& m) {
  std::string row;
  row += std::to_string(m.iter) + ',';
  row += std::to_string(m.samples_total) + ',';
  row += format_double(m.loss) + ',';
  row += std::to_string(m.modes_total) + ',';
  row += std::to_string(m.modes_new) + ',';
  row += format_double(m.r_topk) + ',';
  row += std::to_string(m.region_id) + ',';
  row += m.switched ? "1" : "0";
  return row;
}

std::string planner_csv_row(const IterationMetrics& m) {
  return std::to_string(m.iter) + ',' + std::to_string(m.region_id) + ',' +
         (m.switched ? "1" : "0") + ',' + std::to_string(m.top_astar);
}

std::string log_csv(const RunLog& log) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& m : log.rows) out += csv_row(m) + '\n';
  return out;
}

std::string planner_csv(const RunLog& log) {
  std::string out(kPlannerCsvHeader);
  out += '\n';
  for (const auto& m : log.rows) out += planner_csv_row(m) + '\n';
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << data;
}

}  // namespace

RunResult run(const RunConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
  RunResult result{{}, make_run_state(cfg)};
  result.log.rows.reserve(static_cast<std::size_t>(cfg.iterations));
  for (long it = 0; it < cfg.iterations; ++it) {
    IterationMetrics m;
    try {
      m = training_round(result.state);
    } catch (const Error& e) {
      if (e.code() != Errc::NonFinite) throw;
      throw Error(Errc::NonFinite, "iteration " + std::to_string(it) + ": " + e.what());
    }
    m.sampled.clear();
    m.accepted.clear();
    m.accepted_source.clear();
    result.log.rows.push_back(std::move(m));
  }
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    write_file(*out_dir / "log.csv", log_csv(result.log));
    write_file(*out_dir / "planner.csv", planner_csv(result.log));
    write_file(*out_dir / "checkpoint.json", checkpoint_json(result.state));
  }
  return result;
}

namespace {

constexpr int kCheckpointVersion = 1;

json block_json(const PolicyParams& params, const ParamBlock& b) {
  auto vals = params.block_values(b.name);
  json rows = json::array();
  for (int r = 0; r < b.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < b.cols; ++c) row.push_back(vals[static_cast<std::size_t>(r) * b.cols + c]);
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const std::exception& e) {
    throw Error(Errc::ParseError, std::string("checkpoint.") + key + ": " + e.what());
  }
}

}  // namespace

std::string checkpoint_json(const RunState& state) {
  json doc;
  doc["version"] = kCheckpointVersion;
  doc["env_signature"] = state.env->signature();
  json params = json::object();
  for (const ParamBlock& b : state.policy.params.blocks())
    params[b.name] = block_json(state.policy.params, b);
  doc["params"] = std::move(params);
  doc["opt_state"] = {{"step", state.opt.step},   {"lr", state.opt.lr},
                      {"lr_log_z", state.opt.lr_log_z}, {"beta1", state.opt.beta1},
                      {"beta2", state.opt.beta2}, {"eps", state.opt.eps},
                      {"m", state.opt.m},         {"v", state.opt.v}};
  doc["log_z"] = state.policy.params.log_z();
  std::vector<int> region;
  for (std::size_t i = 0; i < state.region.valid.size(); ++i)
    if (state.region.valid[i]) region.push_back(static_cast<int>(i));
  doc["planner_state"] = {{"hr", state.scores.hr},
                          {"cnt", state.scores.cnt},
                          {"his", state.decision.his},
                          {"diff", state.decision.diff},
                          {"step", state.decision.step},
                          {"iter", state.decision.iter},
                          {"region", region},
                          {"region_id", state.region.id},
                          {"regions_drawn", state.regions_drawn}};
  doc["iteration"] = state.iteration;
  doc["samples_total"] = state.samples_total;
  return doc.dump(1) + "\n";
}

void restore_checkpoint(RunState& state, std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ParseError, e.what());
  }
  if (field<int>(doc, "version") != kCheckpointVersion)
    throw Error(Errc::ParseError, "checkpoint.version: unsupported");
  if (field<std::string>(doc, "env_signature") != state.env->signature())
    throw Error(Errc::ParseError, "checkpoint.env_signature: does not match the environment");
  PolicyParams& params = state.policy.params;
  const json& pj = doc.at("params");
  for (const ParamBlock& b : params.blocks()) {
    const auto rows = field<std::vector<std::vector<double>>>(pj, b.name.c_str());
    if (static_cast<int>(rows.size()) != b.rows)
      throw Error(Errc::ParseError, "checkpoint.params." + b.name + ": shape mismatch");
    auto vals = params.block_values(b.name);
    for (int r = 0; r < b.rows; ++r) {
      if (static_cast<int>(rows[r].size()) != b.cols)
        throw Error(Errc::ParseError, "checkpoint.params." + b.name + ": shape mismatch");
      for (int c = 0; c < b.cols; ++c) vals[static_cast<std::size_t>(r) * b.cols + c] = rows[r][c];
    }
  }
  params.set_log_z(field<double>(doc, "log_z"));
  const json& oj = doc.at("opt_state");
  state.opt.step = field<long>(oj, "step");
  state.opt.lr = field<double>(oj, "lr");
  state.opt.lr_log_z = field<double>(oj, "lr_log_z");
  state.opt.beta1 = field<double>(oj, "beta1");
  state.opt.beta2 = field<double>(oj, "beta2");
  state.opt.eps = field<double>(oj, "eps");
  state.opt.m = field<std::vector<double>>(oj, "m");
  state.opt.v = field<std::vector<double>>(oj, "v");
  if (state.opt.m.size() != params.size() || state.opt.v.size() != params.size())
    throw Error(Errc::ParseError, "checkpoint.opt_state: shape mismatch");
  const json& plj = doc.at("planner_state");
  state.scores.hr = field<std::vector<double>>(plj, "hr");
  state.scores.cnt = field<std::vector<double>>(plj, "cnt");
  state.decision.his = field<std::vector<double>>(plj, "his");
  state.decision.diff = field<std::vector<double>>(plj, "diff");
  state.decision.step = field<int>(plj, "step");
  state.decision.iter = field<int>(plj, "iter");
  state.region.valid.assign(static_cast<std::size_t>(state.env->n_astar()), 0);
  for (int i : field<std::vector<int>>(plj, "region")) {
    if (i < 0 || i >= state.env->n_astar())
      throw Error(Errc::ParseError, "checkpoint.planner_state.region: index out of range");
    state.region.valid[static_cast<std::size_t>(i)] = 1;
  }
  state.region.id = field<std::uint64_t>(plj, "region_id");
  state.regions_drawn = field<std::uint64_t>(plj, "regions_drawn");
  state.iteration = field<long>(doc, "iteration");
  state.samples_total = field<long>(doc, "samples_total");
}

double gradcheck_instance(const ObjectiveConfig& objective, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "gradcheck");
  EnvPtr env;
  switch (seed % 3) {
    case 0:
      env = std::make_shared<BitSeqEnv>(BitSeqSpec{8, 4, {"11110000", "10100101"}, 2});
      break;
    case 1: {
      PamdpSpec spec;
      spec.length = 3;
      spec.reward_floor = 0.5;
      spec.reward_table = {{"ACG", 2.0}, {"AAA", 3.0}, {"GUC", 1.5}};
      env = std::make_shared<PamdpEnv>(std::move(spec));
      break;
    }
    default:
      env = std::make_shared<ToyTreeEnv>(ToyTreeSpec{3, 3, "peaked", {}});
      break;
  }
  auto encoder = std::make_shared<SlotOneHotEncoder>(*env);
  NetShape shape{encoder->dim(), {6, 5}, env->n_actions()};
  Policy policy{encoder, PolicyParams::initialize(shape, rng)};
  for (double& v : policy.params.values()) v += 0.5 * (2.0 * rng.uniform() - 1.0);
  const RegionMask full = RegionMask::full(env->n_astar());
  std::vector<Trajectory> batch;
  const int n = 2 + static_cast<int>(rng.below(3));
  for (int i = 0; i < n; ++i) batch.push_back(rollout(*env, policy, full, rng, 0.3));
  const ObjectiveProblem prob = build_objective(*env, *encoder, batch, objective);
  const LossGrad lg = gradient(policy.params, prob.features, prob.loss);
  const auto num = numerical_gradient(policy.params, prob.features, prob.loss, 1e-5);
  return max_relative_error(lg.grad, num);
}

std::vector<RegionStatRow> region_stats(const Environment& env, double p, int masks,
                                        std::uint64_t seed) {
  if (masks < 1) throw Error(Errc::BadSpec, "need at least one mask");
  RegionConfig cfg;
  cfg.p = p;
  cfg.selection_mode = SelectionMode::Bernoulli;
  const auto full = depth_profile(env);
  std::vector<double> sums(full.size(), 0.0);
  for (int i = 0; i < masks; ++i) {
    Rng rng = Rng::stream(seed, "region", {static_cast<std::uint64_t>(i)});
    const RegionMask mask = sample_bernoulli_region(env.n_astar(), cfg, rng);
    const auto prof = depth_profile(env, &mask);
    for (std::size_t l = 0; l < sums.size(); ++l) sums[l] += prof[l];
  }
  std::vector<RegionStatRow> rows;
  for (std::size_t l = 0; l < full.size(); ++l) {
    RegionStatRow r;
    r.depth = static_cast<int>(l);
    r.expected_size = std::pow(p, static_cast<double>(l)) * full[l];
    r.mc_mean_size = sums[l] / masks;
    r.rel_err = r.expected_size > 0.0
                    ? std::abs(r.mc_mean_size - r.expected_size) / r.expected_size
                    : 0.0;
    rows.push_back(r);
  }
  return rows;
}

LogSummary summarize_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open log " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw Error(Errc::ParseError, path.string() + ":1: unexpected header");
  LogSummary s;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 8)
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) +
                                        ": expected 8 columns");
    try {
      s.modes_total = std::stoi(cols[3]);
      s.modes_new_sum += std::stol(cols[4]);
      s.r_topk = std::stod(cols[5]);
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(lineno) +
                                        ": malformed number");
    }
    ++s.rows;
  }
  return s;
}

}  // namespace pgfn
