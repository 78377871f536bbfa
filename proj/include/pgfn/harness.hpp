#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pgfn/local_search.hpp"
#include "pgfn/tasks.hpp"

namespace pgfn {

enum class TaskKind { BitSeq, Pamdp, ToyTree };

struct TaskConfig {
  TaskKind kind = TaskKind::BitSeq;
  // bitseq: modes come from `bitseq.modes`, else `modes_file`, else are
  // synthesized (n_modes draws from `basis`, stream "modes" on mode_seed).
  BitSeqSpec bitseq;
  std::string modes_file;
  int n_modes = 4;
  std::vector<std::string> basis;  // empty: built-in basis
  std::uint64_t mode_seed = 0;
  // pamdp
  PamdpSpec pamdp;
  std::string reward_table;
  // toytree
  ToyTreeSpec toytree;
};

// Defaults are the values a freshly constructed RunConfig holds.
struct RunConfig {
  TaskConfig task;
  ObjectiveConfig objective;
  RegionConfig region;
  LocalSearchConfig ls;
  int min_steps = 5;
  AvgSource avg_source = AvgSource::Diff;
  long iterations = 1000;
  double lr = 1e-3;
  double lr_log_z = 1e-1;
  std::uint64_t seed = 0;
  double eps_uniform = 0.05;
  std::vector<int> hidden{128, 128};
  int topk = 100;
  double reward_threshold = 0.95;
};

// Strict JSON schema: unknown keys and out-of-range values throw ParseError
// naming the key. Relative file paths resolve against `base_dir`.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

EnvPtr make_env(const RunConfig& cfg);
std::shared_ptr<ModeTracker> make_mode_tracker(const RunConfig& cfg, const Environment& env);
// Slot one-hot MLP initialized from the "init" stream.
Policy make_policy(const RunConfig& cfg, const Environment& env);
TrainConfig train_config(const RunConfig& cfg);
RunState make_run_state(const RunConfig& cfg);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

inline constexpr std::string_view kCsvHeader =
    "iter,samples_total,loss,modes_total,modes_new,r_topk,region_id,switched";
inline constexpr std::string_view kPlannerCsvHeader = "iter,region_id,switched,top_astar_by_score";

std::string csv_row(const IterationMetrics& m);
std::string planner_csv_row(const IterationMetrics& m);

struct RunLog {
  std::vector<IterationMetrics> rows;  // trajectories stripped
};

struct RunResult {
  RunLog log;
  RunState state;
};

// Runs cfg.iterations training rounds. With `out_dir`, writes log.csv,
// planner.csv and checkpoint.json there. NonFinite errors are rethrown with
// the failing iteration in the message.
RunResult run(const RunConfig& cfg, const std::optional<std::filesystem::path>& out_dir = {});

std::string log_csv(const RunLog& log);
std::string planner_csv(const RunLog& log);

// Checkpoint document: version, env_signature, params (named nested lists),
// opt_state, log_z, planner_state.
std::string checkpoint_json(const RunState& state);
// Restores params, optimizer, planner and region into a state built from the
// same config. Throws ParseError on a malformed document or signature mismatch.
void restore_checkpoint(RunState& state, std::string_view text);

struct LogSummary {
  long rows = 0;
  int modes_total = 0;
  long modes_new_sum = 0;
  double r_topk = 0.0;
};

// Analytic vs central-difference gradient on a small random instance (tiny
// network, random parameters, a short batch of rollouts on one of the built-in
// tasks chosen by the seed). Returns the maximum per-entry relative error.
double gradcheck_instance(const ObjectiveConfig& objective, std::uint64_t seed);

struct RegionStatRow {
  int depth = 0;
  double expected_size = 0.0;
  double mc_mean_size = 0.0;
  double rel_err = 0.0;
};

// Mean exact |R_l| over `masks` Bernoulli(p) masks against p^l |S_l|.
std::vector<RegionStatRow> region_stats(const Environment& env, double p, int masks,
                                        std::uint64_t seed);

// Reads a run CSV; throws ParseError on a wrong header or malformed row.
LogSummary summarize_log(const std::filesystem::path& path);

}  // namespace pgfn
