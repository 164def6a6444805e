// Command-line driver: runs one experiment (optionally a grid) and writes
// per-run CSVs plus a summary under --out.

#include "aggucb/harness.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
  CLI::App app{"Group-aware neural contextual bandit simulator"};

  std::string config_path;
  app.add_option("--config", config_path, "flat JSON config file")->check(CLI::ExistingFile);

  // Everything else is an override applied on top of the config file.
  std::vector<std::pair<std::string, nlohmann::json>> overrides;

  const auto add_str = [&](const std::string& flag, const std::string& key, const std::string& help) {
    return app.add_option_function<std::string>(
        flag, [&, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
  };
  const auto add_int = [&](const std::string& flag, const std::string& key, const std::string& help) {
    return app.add_option_function<int>(flag, [&, key](int v) { overrides.emplace_back(key, v); }, help);
  };
  const auto add_num = [&](const std::string& flag, const std::string& key, const std::string& help) {
    return app.add_option_function<double>(flag, [&, key](double v) { overrides.emplace_back(key, v); }, help);
  };

  add_str("--algo", "algo", "agg_ucb | neural_pool | neural_ind | lin_ucb | oracle");
  add_str("--env", "env", "synthetic | classification | recommendation");
  add_int("--T", "T", "horizon");
  add_int("--m", "m", "network width");
  add_int("--L", "L", "network depth");
  add_int("--k-hop", "k_hop", "adjacency power");
  add_num("--gamma", "gamma", "exploration weight");
  add_num("--lambda", "lambda", "confidence regularizer");
  add_num("--eta", "eta", "learning rate");
  add_int("--J", "J", "gradient steps per training call");
  add_num("--sigma-k", "sigma_k", "RBF kernel bandwidth");
  add_num("--sigma-s", "sigma_s", "edge-weight bandwidth");
  add_str("--seed", "seeds", "seed list INT[,INT...]");
  add_str("--mode", "mode", "exact | diagonal");
  add_str("--out", "out", "output directory");
  add_str("--activation", "activation", "tanh | sigmoid | relu");
  add_int("--train-every", "train_every", "retrain every N rounds");
  add_str("--reward-fn", "reward_fn", "linear | cosine | quadratic (synthetic)");
  add_int("--n-groups", "n_groups", "arm groups (synthetic)");
  add_int("--d-x", "d_x", "context dimension (synthetic)");
  add_num("--noise", "noise_sigma", "reward noise std (synthetic)");
  add_str("--features", "features", "feature CSV (classification)");
  add_str("--ratings", "ratings", "ratings CSV (recommendation)");
  add_str("--item-groups", "item_groups", "item-group CSV (recommendation)");
  app.add_flag_function("--warm-start", [&](std::int64_t) { overrides.emplace_back("warm_start", true); },
                        "continue training from the current parameters");
  app.add_flag_function("--train-curve", [&](std::int64_t) { overrides.emplace_back("train_curve", true); },
                        "write per-step training losses");
  app.add_flag_function("--save-params", [&](std::int64_t) { overrides.emplace_back("save_params", true); },
                        "write a parameter snapshot per run (agg_ucb)");
  app.add_flag_function("--serial", [&](std::int64_t) { overrides.emplace_back("parallel_runs", false); },
                        "run seeds one after another");

  std::vector<std::string> grid_specs;
  app.add_option("--grid", grid_specs, "grid entry KEY=V1,V2,... (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    aggucb::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = aggucb::load_config(config_path);
    for (const auto& [key, value] : overrides) aggucb::apply_setting(cfg, key, value);
    for (const auto& spec : grid_specs) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("grid entry '" + spec + "' needs KEY=values");
      nlohmann::json values = nlohmann::json::array();
      std::stringstream ss(spec.substr(eq + 1));
      for (std::string tok; std::getline(ss, tok, ',');) values.push_back(std::stod(tok));
      cfg = aggucb::parse_config(nlohmann::json{{"grid", nlohmann::json{{spec.substr(0, eq), values}}}}, cfg);
    }

    const auto result = cfg.grid.empty() ? aggucb::run_experiment(cfg) : aggucb::grid_search(cfg);
    for (const auto& run : result.runs) {
      std::cout << cfg.algo << " " << aggucb::grid_tag(run.point) << " seed=" << run.seed
                << " rounds=" << run.logs.size() << " cum_regret=" << run.final_cum_regret();
      if (!run.ok()) std::cout << " FAILED: " << run.error;
      std::cout << "\n";
    }
    if (result.best && !cfg.grid.empty())
      std::cout << "best " << aggucb::grid_tag(result.best->point) << " mean_cum_regret="
                << result.best->mean_final_regret << "\n";
    return result.ok() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
