#pragma once

#include "aggucb/datasets.hpp"
#include "aggucb/policy.hpp"
#include "aggucb/synthetic_env.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace aggucb {

inline constexpr const char* kRoundLogHeader = "t,arm_id,group,point,width,reward,regret,cum_regret,loss";

struct EnvSpec {
  std::string name = "synthetic";  ///< synthetic | classification | recommendation

  // synthetic
  int n_groups = 10;
  int d_x = 10;
  int n_clusters = 2;
  double spread = 0.3;
  double coupling = 1.0;
  RewardFn reward_fn = RewardFn::Cosine;
  double noise_sigma = 0.05;
  std::uint64_t world_seed = 7;  ///< fixes centers and reward parameters across run seeds

  // datasets
  std::filesystem::path features;
  std::filesystem::path ratings;
  std::filesystem::path item_groups;
  int sub_divisions = 5;
  int rank = 20;
  int arms_per_round = 10;
};

struct ExperimentConfig {
  std::string algo = "agg_ucb";
  EnvSpec env;
  int T = 1000;
  AgentConfig agent = default_agent();
  /// Overrides the environment's preference when set.
  std::optional<bool> ingest_all_candidates;
  std::vector<std::uint64_t> seeds{0};
  /// Per-parameter value lists; keys are config keys such as "gamma" or "eta".
  std::map<std::string, std::vector<double>> grid;
  std::filesystem::path out = "runs";
  bool train_curve = false;
  bool save_params = false;
  bool parallel_runs = true;

  void validate() const;
  static AgentConfig default_agent();
};

/// Applies one flat key (as used in JSON configs and grids) to `cfg`.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const nlohmann::json& value);
/// Flat key-value JSON; a "grid" key maps parameter names to value lists.
ExperimentConfig parse_config(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

std::unique_ptr<Environment> make_environment(const EnvSpec& spec, std::uint64_t seed);

struct RoundLog {
  std::size_t t = 0;
  std::int64_t arm_id = 0;
  int group = 0;
  double point = 0.0;
  double width = 0.0;
  double reward = 0.0;
  double regret = 0.0;
  double cum_regret = 0.0;
  double loss = 0.0;
};

std::string format_round(const RoundLog& r);

/// One grid point: sorted (key, value) pairs. Empty without a grid.
using GridPoint = std::vector<std::pair<std::string, double>>;
std::string grid_tag(const GridPoint& point);
std::vector<GridPoint> grid_points(const std::map<std::string, std::vector<double>>& grid);

struct RunResult {
  GridPoint point;
  std::uint64_t seed = 0;
  std::vector<RoundLog> logs;
  bool diverged = false;
  std::string error;
  std::filesystem::path csv;

  bool ok() const noexcept { return !diverged && error.empty(); }
  double final_cum_regret() const noexcept { return logs.empty() ? 0.0 : logs.back().cum_regret; }
};

/// T rounds of step / observe / update for a single seed. Writes the CSV at
/// `csv` (flushed every round) unless it is empty.
RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& csv,
                     const GridPoint& point = {});

struct GridRow {
  GridPoint point;
  double mean_final_regret = 0.0;
  std::size_t runs = 0;
  bool ok = true;
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  std::vector<GridRow> table;
  /// Lowest mean final regret over successful grid points; ties go to the
  /// lexicographically smallest value tuple.
  std::optional<GridRow> best;

  bool ok() const noexcept;
};

/// Every (grid point, seed) run, the per-run CSVs, and <out>/summary.csv.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// run_experiment restricted to grid reporting; throws if the grid is empty.
ExperimentResult grid_search(const ExperimentConfig& cfg);

}  // namespace aggucb
