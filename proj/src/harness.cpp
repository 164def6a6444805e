#include "aggucb/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace aggucb {

AgentConfig ExperimentConfig::default_agent() {
  AgentConfig a;
  a.width = 500;
  a.depth = 2;
  return a;
}

void ExperimentConfig::validate() const {
  static const std::set<std::string> algos{"agg_ucb", "neural_pool", "neural_ind", "lin_ucb", "oracle"};
  if (!algos.contains(algo)) throw std::invalid_argument("unknown algorithm '" + algo + "'");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  agent.validate();
  for (const auto& [key, values] : grid)
    if (values.empty()) throw std::invalid_argument("grid entry '" + key + "' has no values");
  if (env.name == "classification" && env.features.empty())
    throw std::invalid_argument("classification env needs a features file");
  if (env.name == "recommendation" && (env.ratings.empty() || env.item_groups.empty()))
    throw std::invalid_argument("recommendation env needs ratings and item-group files");
}

namespace {

int as_int(const std::string& key, const nlohmann::json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number()) {
    const double d = v.get<double>();
    if (d == std::floor(d)) return static_cast<int>(d);
  }
  throw std::invalid_argument("config key '" + key + "' expects an integer");
}

double as_double(const std::string& key, const nlohmann::json& v) {
  if (!v.is_number()) throw std::invalid_argument("config key '" + key + "' expects a number");
  return v.get<double>();
}

bool as_bool(const std::string& key, const nlohmann::json& v) {
  if (!v.is_boolean()) throw std::invalid_argument("config key '" + key + "' expects true or false");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const nlohmann::json& v) {
  if (!v.is_string()) throw std::invalid_argument("config key '" + key + "' expects a string");
  return v.get<std::string>();
}

std::vector<std::uint64_t> as_seeds(const nlohmann::json& v) {
  std::vector<std::uint64_t> out;
  if (v.is_number_unsigned() || v.is_number_integer()) {
    out.push_back(v.get<std::uint64_t>());
  } else if (v.is_array()) {
    for (const auto& e : v) out.push_back(e.get<std::uint64_t>());
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto pos = s.find(',', start);
      const auto tok = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
      if (tok.empty()) throw std::invalid_argument("empty seed in '" + s + "'");
      out.push_back(std::stoull(tok));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
  } else {
    throw std::invalid_argument("seeds must be an integer, a list, or a comma-separated string");
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const nlohmann::json& v) {
  auto& a = cfg.agent;
  auto& e = cfg.env;
  if (key == "algo") cfg.algo = as_string(key, v);
  else if (key == "env") e.name = as_string(key, v);
  else if (key == "T") cfg.T = as_int(key, v);
  else if (key == "m") a.width = as_int(key, v);
  else if (key == "L") a.depth = as_int(key, v);
  else if (key == "k_hop") a.k_hop = as_int(key, v);
  else if (key == "gamma") a.gamma = as_double(key, v);
  else if (key == "lambda") a.lambda = as_double(key, v);
  else if (key == "eta") a.train.eta = as_double(key, v);
  else if (key == "J") a.train.steps = as_int(key, v);
  else if (key == "warm_start") a.train.warm_start = as_bool(key, v);
  else if (key == "train_every") a.train_every = as_int(key, v);
  else if (key == "sigma_k") a.kernel.bandwidth_k = as_double(key, v);
  else if (key == "sigma_s") a.kernel.bandwidth_s = as_double(key, v);
  else if (key == "mode") a.mode = parse_confidence_mode(as_string(key, v));
  else if (key == "activation") a.activation = parse_activation(as_string(key, v));
  else if (key == "ingest_all") cfg.ingest_all_candidates = as_bool(key, v);
  else if (key == "seed" || key == "seeds") cfg.seeds = as_seeds(v);
  else if (key == "out") cfg.out = as_string(key, v);
  else if (key == "train_curve") cfg.train_curve = as_bool(key, v);
  else if (key == "save_params") cfg.save_params = as_bool(key, v);
  else if (key == "parallel_runs") cfg.parallel_runs = as_bool(key, v);
  else if (key == "n_groups") e.n_groups = as_int(key, v);
  else if (key == "d_x") e.d_x = as_int(key, v);
  else if (key == "n_clusters") e.n_clusters = as_int(key, v);
  else if (key == "spread") e.spread = as_double(key, v);
  else if (key == "coupling") e.coupling = as_double(key, v);
  else if (key == "reward_fn") e.reward_fn = parse_reward_fn(as_string(key, v));
  else if (key == "noise_sigma") e.noise_sigma = as_double(key, v);
  else if (key == "world_seed") e.world_seed = v.get<std::uint64_t>();
  else if (key == "features") e.features = as_string(key, v);
  else if (key == "ratings") e.ratings = as_string(key, v);
  else if (key == "item_groups") e.item_groups = as_string(key, v);
  else if (key == "sub_divisions") e.sub_divisions = as_int(key, v);
  else if (key == "rank") e.rank = as_int(key, v);
  else if (key == "arms_per_round") e.arms_per_round = as_int(key, v);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const nlohmann::json& j, ExperimentConfig base) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "grid") {
      if (!value.is_object()) throw std::invalid_argument("grid must map keys to value lists");
      base.grid.clear();
      for (const auto& [gk, gv] : value.items()) {
        ExperimentConfig probe = base;
        std::vector<double> values;
        for (const auto& x : gv) {
          apply_setting(probe, gk, x);
          values.push_back(x.get<double>());
        }
        base.grid[gk] = std::move(values);
      }
    } else {
      apply_setting(base, key, value);
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(nlohmann::json::parse(in), std::move(base));
}

std::unique_ptr<Environment> make_environment(const EnvSpec& spec, std::uint64_t seed) {
  if (spec.name == "synthetic") {
    auto world = make_clustered_config(spec.n_groups, spec.d_x, spec.n_clusters, spec.spread, spec.coupling,
                                       spec.reward_fn, spec.noise_sigma, spec.world_seed);
    return std::make_unique<SyntheticEnv>(std::move(world), seed);
  }
  if (spec.name == "classification")
    return std::make_unique<ClassificationEnv>(read_features_csv(spec.features), spec.sub_divisions, seed);
  if (spec.name == "recommendation") {
    RecommendationOptions opts;
    opts.rank = spec.rank;
    opts.arms_per_round = spec.arms_per_round;
    return std::make_unique<RecommendationEnv>(read_ratings_csv(spec.ratings), read_item_groups_csv(spec.item_groups),
                                               opts, seed);
  }
  throw std::invalid_argument("unknown environment '" + spec.name + "'");
}

std::string format_round(const RoundLog& r) {
  return std::to_string(r.t) + "," + std::to_string(r.arm_id) + "," + std::to_string(r.group) + "," + fmt(r.point) +
         "," + fmt(r.width) + "," + fmt(r.reward) + "," + fmt(r.regret) + "," + fmt(r.cum_regret) + "," + fmt(r.loss);
}

std::string grid_tag(const GridPoint& point) {
  if (point.empty()) return "default";
  std::string tag;
  for (const auto& [k, v] : point) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%g", v);
    if (!tag.empty()) tag += "_";
    tag += k + "=" + buf;
  }
  return tag;
}

std::vector<GridPoint> grid_points(const std::map<std::string, std::vector<double>>& grid) {
  std::vector<GridPoint> points{GridPoint{}};
  for (const auto& [key, values] : grid) {
    std::vector<GridPoint> next;
    for (const auto& p : points)
      for (double v : values) {
        GridPoint q = p;
        q.emplace_back(key, v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  return points;
}

RunResult run_single(const ExperimentConfig& base, std::uint64_t seed, const std::filesystem::path& csv,
                     const GridPoint& point) {
  ExperimentConfig cfg = base;
  for (const auto& [k, v] : point) apply_setting(cfg, k, v);
  cfg.validate();

  RunResult result;
  result.point = point;
  result.seed = seed;
  result.csv = csv;

  std::ofstream out, curve_out;
  if (!csv.empty()) {
    if (csv.has_parent_path()) std::filesystem::create_directories(csv.parent_path());
    out.open(csv);
    if (!out) throw std::runtime_error("cannot write " + csv.string());
    out << kRoundLogHeader << "\n" << std::flush;
  }

  auto env = make_environment(cfg.env, seed);
  AgentConfig agent = cfg.agent;
  agent.ingest_all_candidates = cfg.ingest_all_candidates.value_or(env->ingest_all_candidates());
  auto policy = make_policy(cfg.algo, agent, env->context_dim(), env->n_groups(), seed);

  auto* neural = dynamic_cast<NeuralUcbPolicy*>(policy.get());
  if (neural && cfg.train_curve && !csv.empty()) {
    auto path = csv;
    path.replace_extension();
    path += "_train.csv";
    curve_out.open(path);
    curve_out << "round,step,loss\n";
    neural->set_train_curve([&curve_out](std::size_t round, int step, double loss) {
      curve_out << round << "," << step << "," << fmt(loss) << "\n";
    });
  }

  double cum = 0.0;
  try {
    for (int t = 1; t <= cfg.T; ++t) {
      const EnvRound round = env->next_round();
      policy->reveal_expected_rewards(round.expected);
      const RoundDecision d = policy->step(round.candidates);
      const double reward = env->observe(round, d.chosen_index);
      policy->update(d, reward);

      RoundLog log;
      log.t = static_cast<std::size_t>(t);
      log.arm_id = d.chosen.arm_id;
      log.group = d.chosen.group;
      log.point = d.point;
      log.width = d.width;
      log.reward = reward;
      log.regret = round.best_expected() - round.expected[d.chosen_index];
      cum += log.regret;
      log.cum_regret = cum;
      log.loss = policy->last_loss();
      if (out.is_open()) out << format_round(log) << "\n" << std::flush;
      result.logs.push_back(log);
    }
  } catch (const DivergenceError& e) {
    result.diverged = true;
    result.error = e.what();
  }

  if (neural && cfg.save_params && !csv.empty() && cfg.algo == "agg_ucb") {
    const auto& model = dynamic_cast<const GraphRewardModel&>(neural->model());
    auto path = csv;
    path.replace_extension(".params");
    std::ofstream p(path);
    save_params(p, NetworkParams(model.shape(), neural->params()));
  }
  return result;
}

bool ExperimentResult::ok() const noexcept {
  return std::all_of(runs.begin(), runs.end(), [](const RunResult& r) { return r.ok(); });
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto points = grid_points(cfg.grid);
  for (const auto& p : points) {
    ExperimentConfig probe = cfg;
    for (const auto& [k, v] : p) apply_setting(probe, k, v);
    probe.validate();
  }

  ExperimentResult result;
  result.runs.resize(points.size() * cfg.seeds.size());
  std::filesystem::create_directories(cfg.out);
  const auto n = static_cast<std::ptrdiff_t>(result.runs.size());
#pragma omp parallel for schedule(dynamic, 1) if (cfg.parallel_runs)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& point = points[static_cast<std::size_t>(i) / cfg.seeds.size()];
    const auto seed = cfg.seeds[static_cast<std::size_t>(i) % cfg.seeds.size()];
    const auto csv = cfg.out / (cfg.algo + "_" + grid_tag(point) + "_seed" + std::to_string(seed) + ".csv");
    auto& slot = result.runs[static_cast<std::size_t>(i)];
    try {
      slot = run_single(cfg, seed, csv, point);
    } catch (const std::exception& e) {
      slot.point = point;
      slot.seed = seed;
      slot.csv = csv;
      slot.error = e.what();
    }
  }

  for (std::size_t g = 0; g < points.size(); ++g) {
    GridRow row;
    row.point = points[g];
    double total = 0.0;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
      const auto& r = result.runs[g * cfg.seeds.size() + s];
      row.ok = row.ok && r.ok();
      total += r.final_cum_regret();
      ++row.runs;
    }
    row.mean_final_regret = total / static_cast<double>(row.runs);
    result.table.push_back(row);
    if (!row.ok) continue;
    const auto values = [](const GridPoint& p) {
      std::vector<double> v;
      for (const auto& kv : p) v.push_back(kv.second);
      return v;
    };
    if (!result.best || row.mean_final_regret < result.best->mean_final_regret ||
        (row.mean_final_regret == result.best->mean_final_regret && values(row.point) < values(result.best->point)))
      result.best = row;
  }

  std::ofstream summary(cfg.out / "summary.csv");
  summary << "algo,grid_point,seed,rounds,final_cum_regret,status\n";
  for (const auto& r : result.runs) {
    summary << cfg.algo << "," << grid_tag(r.point) << "," << r.seed << "," << r.logs.size() << ","
            << fmt(r.final_cum_regret()) << "," << (r.ok() ? "ok" : r.diverged ? "diverged" : "error") << "\n";
  }
  return result;
}

ExperimentResult grid_search(const ExperimentConfig& cfg) {
  if (cfg.grid.empty()) throw std::invalid_argument("grid_search needs a non-empty grid");
  auto result = run_experiment(cfg);
  std::ofstream table(cfg.out / "grid.csv");
  table << "grid_point,runs,mean_final_cum_regret,best\n";
  for (const auto& row : result.table) {
    const bool best = result.best && row.point == result.best->point;
    table << grid_tag(row.point) << "," << row.runs << "," << fmt(row.mean_final_regret) << "," << (best ? 1 : 0)
          << "\n";
  }
  return result;
}

}  // namespace aggucb
