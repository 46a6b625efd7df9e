// Command-line harness: builds a model, runs a sampler ensemble under the
// fixed gradient-evaluation budget, and emits plot-ready CSV/JSON metrics.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "ewsg/harness.hpp"

namespace {

ewsg::XPolicy parse_x_policy(const std::string& s, double& constant) {
  if (s == "recommended") return ewsg::XPolicy::Recommended;
  if (s == "zero") return ewsg::XPolicy::Zero;
  if (s == "momentum-kill") return ewsg::XPolicy::MomentumKill;
  if (s.rfind("constant=", 0) == 0) {
    constant = std::stod(s.substr(9));
    return ewsg::XPolicy::Constant;
  }
  throw ewsg::ConfigError("x-policy: expected recommended|zero|constant=v|momentum-kill, got '" + s + "'");
}

void apply_config_file(const std::string& path, ewsg::ExperimentConfig& c) {
  std::ifstream in(path);
  if (!in) throw ewsg::ConfigError("config: cannot open " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  auto get = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = doc[key].template get<std::decay_t<decltype(field)>>();
  };
  get("run_id", c.run_id);
  get("model", c.model);
  get("dataset_path", c.dataset_path);
  get("model_n", c.model_n);
  get("model_p", c.model_p);
  get("model_seed", c.model_seed);
  get("prior_variance", c.prior_variance);
  get("standardize", c.standardize);
  get("sampler", c.sampler);
  get("chains", c.chains);
  get("format", c.format);
  get("sweep_h", c.sweep_h);
  get("sweep_T", c.sweep_T);
  get("fixed_T", c.fixed_T);
  if (doc.contains("sampler_config")) {
    auto& sc = doc["sampler_config"];
    auto gets = [&](const char* key, auto& field) {
      if (sc.contains(key)) field = sc[key].template get<std::decay_t<decltype(field)>>();
    };
    gets("h", c.sampler_config.h);
    gets("gamma", c.sampler_config.gamma);
    gets("sigma", c.sampler_config.sigma);
    gets("M", c.sampler_config.M);
    gets("b", c.sampler_config.b);
    gets("K", c.sampler_config.K);
    gets("x_constant", c.sampler_config.x_constant);
    gets("seed", c.sampler_config.seed);
    gets("L", c.sampler_config.L);
    gets("persist_index", c.sampler_config.persist_index);
    gets("thin", c.sampler_config.thin);
    gets("steps_override", c.sampler_config.steps_override);
    if (sc.contains("x_policy"))
      c.sampler_config.x_policy = static_cast<ewsg::XPolicy>(sc["x_policy"].get<int>());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EWSG Langevin sampling harness"};
  app.require_subcommand(1);

  ewsg::ExperimentConfig config;
  std::string x_policy = "recommended";
  std::string sigma = "auto";
  std::string config_file;
  bool print_config = false;

  auto* run = app.add_subcommand("run", "run one experiment or sweep");
  run->add_option("--config", config_file, "JSON config file; CLI flags override its values")
      ->envname("EWSG_CONFIG");
  run->add_option("--run-id", config.run_id)->envname("EWSG_RUN_ID");
  run->add_option("--model", config.model,
                  "gaussian2d | blr | blr-synth | misspec | quadscalar, or a dataset path")
      ->envname("EWSG_MODEL");
  run->add_option("--dataset", config.dataset_path, "CSV path for blr")->envname("EWSG_DATASET");
  run->add_option("--model-n", config.model_n, "term count for synthetic models");
  run->add_option("--model-p", config.model_p, "feature dimension for blr-synth");
  run->add_option("--model-seed", config.model_seed);
  run->add_option("--prior-variance", config.prior_variance);
  run->add_flag("--standardize", config.standardize, "standardize dataset features");
  run->add_option("--sampler", config.sampler, "fg | sghmc | ewsg | sgld | ewsg-od | ewsg-vr")
      ->envname("EWSG_SAMPLER");
  run->add_option("--h", config.sampler_config.h, "step size")->envname("EWSG_H");
  run->add_option("--gamma", config.sampler_config.gamma, "friction")->envname("EWSG_GAMMA");
  run->add_option("--sigma", sigma, "noise amplitude or 'auto' for sqrt(2*gamma)")
      ->envname("EWSG_SIGMA");
  run->add_option("--M", config.sampler_config.M, "index chain length")->envname("EWSG_M");
  run->add_option("--batch", config.sampler_config.b, "minibatch size")->envname("EWSG_BATCH");
  run->add_option("--datapasses", config.sampler_config.K, "data passes K (budget K*n)")
      ->envname("EWSG_DATAPASSES");
  run->add_option("--L", config.sampler_config.L, "variance-calibration period (ewsg-vr)");
  run->add_option("--chains", config.chains)->envname("EWSG_CHAINS");
  run->add_option("--seed", config.sampler_config.seed)->envname("EWSG_SEED");
  run->add_option("--x-policy", x_policy, "recommended | zero | constant=v | momentum-kill")
      ->envname("EWSG_X_POLICY");
  run->add_flag("--persist-index", config.sampler_config.persist_index,
                "experimental: carry the index chain across outer steps");
  run->add_option("--thin", config.sampler_config.thin, "record every j-th step");
  run->add_option("--out", config.out_path, "output path")->envname("EWSG_OUT");
  run->add_option("--sweep-h", config.sweep_h, "comma-separated h values")->delimiter(',');
  run->add_option("--sweep-T", config.sweep_T, "comma-separated T values")->delimiter(',');
  run->add_option("--T", config.fixed_T, "fixed physical time T for runs and h sweeps");
  run->add_option("--format", config.format, "csv | json")->envname("EWSG_FORMAT");
  run->add_flag("--print-config", print_config, "dump the effective config and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    // Config file first, then flags override where given.
    if (!config_file.empty()) {
      ewsg::ExperimentConfig file_config;
      apply_config_file(config_file, file_config);
      for (const auto* opt : run->get_options()) {
        (void)opt;
      }
      // Re-parse flags on top of file values.
      ewsg::ExperimentConfig merged = file_config;
      auto keep_if_set = [&](const std::string& flag, auto& dst, const auto& src) {
        if (run->count(flag) > 0) dst = src;
      };
      keep_if_set("--run-id", merged.run_id, config.run_id);
      keep_if_set("--model", merged.model, config.model);
      keep_if_set("--dataset", merged.dataset_path, config.dataset_path);
      keep_if_set("--model-n", merged.model_n, config.model_n);
      keep_if_set("--model-p", merged.model_p, config.model_p);
      keep_if_set("--model-seed", merged.model_seed, config.model_seed);
      keep_if_set("--prior-variance", merged.prior_variance, config.prior_variance);
      keep_if_set("--standardize", merged.standardize, config.standardize);
      keep_if_set("--sampler", merged.sampler, config.sampler);
      keep_if_set("--h", merged.sampler_config.h, config.sampler_config.h);
      keep_if_set("--gamma", merged.sampler_config.gamma, config.sampler_config.gamma);
      keep_if_set("--M", merged.sampler_config.M, config.sampler_config.M);
      keep_if_set("--batch", merged.sampler_config.b, config.sampler_config.b);
      keep_if_set("--datapasses", merged.sampler_config.K, config.sampler_config.K);
      keep_if_set("--L", merged.sampler_config.L, config.sampler_config.L);
      keep_if_set("--chains", merged.chains, config.chains);
      keep_if_set("--seed", merged.sampler_config.seed, config.sampler_config.seed);
      keep_if_set("--persist-index", merged.sampler_config.persist_index,
                  config.sampler_config.persist_index);
      keep_if_set("--thin", merged.sampler_config.thin, config.sampler_config.thin);
      keep_if_set("--out", merged.out_path, config.out_path);
      keep_if_set("--sweep-h", merged.sweep_h, config.sweep_h);
      keep_if_set("--sweep-T", merged.sweep_T, config.sweep_T);
      keep_if_set("--T", merged.fixed_T, config.fixed_T);
      keep_if_set("--format", merged.format, config.format);
      config = merged;
    }
    if (run->count("--x-policy") > 0 || config_file.empty())
      config.sampler_config.x_policy = parse_x_policy(x_policy, config.sampler_config.x_constant);
    if (sigma != "auto") config.sampler_config.sigma = std::stod(sigma);

    // A bare path passed as --model means a BLR dataset.
    if (config.model.find('/') != std::string::npos ||
        config.model.find(".csv") != std::string::npos) {
      config.dataset_path = config.model;
      config.model = "blr";
    }

    if (print_config) {
      ewsg::ResultRecord echo;
      echo.config = config;
      std::cout << ewsg::to_json(echo);
      return 0;
    }

    ewsg::ResultRecord record = (!config.sweep_h.empty() || !config.sweep_T.empty())
                                    ? ewsg::run_sweep(config)
                                    : ewsg::run_experiment(config);
    const std::string payload = ewsg::emit_results(record);
    if (record.config.out_path.empty()) std::cout << payload;
    if (record.exit_code != 0)
      std::cerr << (record.exit_code == 4 ? "budget audit failure" : "divergence threshold exceeded")
                << "\n";
    return record.exit_code;
  } catch (const ewsg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
