#include "proxyforge/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "proxyforge/complexity.hpp"
#include "proxyforge/config.hpp"
#include "proxyforge/errors.hpp"
#include "proxyforge/gradcheck.hpp"

namespace proxyforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void configure_logging() {
  if (!spdlog::get("proxyforge")) spdlog::set_default_logger(spdlog::stderr_color_st("proxyforge"));
  spdlog::set_level(spdlog::level::info);
  const char* env = std::getenv("PROXYFORGE_LOG");
  if (env == nullptr || *env == '\0') return;
  const std::string value(env);
  const auto level = spdlog::level::from_str(value);
  if (level == spdlog::level::off && value != "off") {
    spdlog::warn("ignoring unknown PROXYFORGE_LOG level '{}'", value);
    return;
  }
  spdlog::set_level(level);
}

namespace {

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << contents;
  if (!out) throw Error(fmt::format("failed writing '{}'", path.string()));
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(fmt::format("cannot create '{}': {}", dir, ec.message()));
  return out;
}

struct CommonOptions {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

int run_train(const CommonOptions& opt) {
  ExperimentConfig cfg = load_experiment_config(opt.config, opt.seed);
  if (opt.workers) cfg.train.workers = *opt.workers;
  const fs::path out = prepare_out_dir(opt.out);

  spdlog::info("training {} ({} epochs, experiment {}, seed {})", loss_name(cfg.train.loss),
               cfg.train.epochs, cfg.experiment, cfg.seed);
  const SyntheticCorpus corpus = generate_dataset(cfg.dataset);
  const TrainResult result = train(cfg.train, corpus);

  write_file(out / "metrics.csv", metrics_csv(result.log));
  write_file(out / "model.json", model_to_json(result.model).dump(1) + "\n");
  json summary = {
      {"loss", std::string(loss_name(cfg.train.loss))},
      {"preset", cfg.preset},
      {"experiment", cfg.experiment},
      {"seed", cfg.seed},
      {"epochs", result.log.size()},
      {"final_eer_percent", result.log.empty() ? json(nullptr) : json(result.log.back().eer_percent)},
      {"best_eer_percent", result.log.empty() ? json(nullptr) : json(result.best_eer_percent)},
  };
  write_file(out / "summary.json", summary.dump(2) + "\n");
  if (!result.log.empty())
    spdlog::info("final EER {:.2f}%, best {:.2f}%", result.log.back().eer_percent,
                 result.best_eer_percent);
  return kExitOk;
}

int run_eval(const CommonOptions& opt, const std::string& model_path) {
  if (!fs::exists(model_path)) {
    spdlog::error("model '{}' does not exist", model_path);
    return kExitUsage;
  }
  ExperimentConfig cfg = load_experiment_config(opt.config, opt.seed);
  if (opt.workers) cfg.train.workers = *opt.workers;
  const TrainedModel model = model_from_json(read_json_file(model_path));
  if (model.embedder.input_dim() != cfg.dataset.feature_dim)
    throw ConfigError(fmt::format("model expects {} features but config has {}",
                                  model.embedder.input_dim(), cfg.dataset.feature_dim));
  const fs::path out = prepare_out_dir(opt.out);

  const SyntheticCorpus corpus = generate_dataset(cfg.dataset);
  const auto trials = evaluation_trials(cfg.train, corpus.test);
  const auto scores =
      score_trials(trials, corpus.test, model.embedder, cfg.train.segments, cfg.train.workers);
  const ScoreSet split = split_scores(trials, scores);
  const EerResult eer = compute_eer(split);

  write_file(out / "scores.csv", trial_scores_csv(trials, scores));
  write_file(out / "det.csv", det_csv(det_curve(split)));
  std::cout << fmt::format("EER% = {:.2f}\n", 100.0 * eer.eer);
  return kExitOk;
}

int run_gradcheck_cmd(const std::string& loss, std::uint64_t seed, std::size_t trials) {
  std::vector<LossKind> kinds;
  if (loss == "all") {
    kinds.assign(kAllLosses.begin(), kAllLosses.end());
  } else if (auto kind = parse_loss_kind(loss)) {
    kinds.push_back(*kind);
  } else {
    spdlog::error("unknown loss '{}'", loss);
    return kExitUsage;
  }
  if (trials == 0) spdlog::warn("gradcheck with zero trials checks nothing");

  GradcheckConfig gc;
  bool ok = true;
  for (LossKind kind : kinds) {
    const GradcheckReport r = run_gradcheck(kind, seed, trials, gc);
    ok = ok && r.passed;
    std::cout << fmt::format("{:<22} embeddings {:.3e}  proxies {:.3e}  alpha {:.3e}  beta {:.3e}  {}\n",
                             loss_name(kind), r.worst.embeddings, r.worst.proxies, r.worst.alpha,
                             r.worst.beta, r.passed ? "ok" : "FAIL");
  }
  return ok ? kExitOk : kExitFailure;
}

int run_complexity(const CommonOptions& opt) {
  const ComplexityGrid grid = parse_complexity_grid(read_json_file(opt.config), opt.seed);
  const fs::path out = prepare_out_dir(opt.out);
  std::vector<SweepRow> rows;
  bool match = true;
  for (const SweepSpec& spec : grid.sweeps) {
    const ScalingReport report = fit_scaling(spec);
    rows.insert(rows.end(), report.rows.begin(), report.rows.end());
    match = match && report.counts_match;
    std::cout << fmt::format("{} vs {}: log-log slope {:.3f} (rms {:.4f}), linear slope {:.3f}, counts {}\n",
                             loss_name(spec.loss), sweep_param_name(spec.param), report.loglog.slope,
                             report.loglog.residual, report.linear.slope,
                             report.counts_match ? "match" : "MISMATCH");
  }
  write_file(out / "scaling.csv", scaling_csv(rows));
  return match ? kExitOk : kExitFailure;
}

void add_common(CLI::App* cmd, CommonOptions& opt, bool config_required) {
  auto* c = cmd->add_option("--config", opt.config, "JSON config file")->check(CLI::ExistingFile);
  if (config_required) c->required();
  cmd->add_option("--out", opt.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", opt.seed, "overrides the config seed");
  cmd->add_option("--workers", opt.workers, "scoring threads")->check(CLI::PositiveNumber);
}

}  // namespace

int run(int argc, const char* const* argv) {
  configure_logging();

  CLI::App app{"Proxy-based metric learning toolkit", "proxyforge"};
  app.require_subcommand(1);

  CommonOptions train_opt, eval_opt, complexity_opt;
  auto* train_cmd = app.add_subcommand("train", "train an embedder and write metrics, model, summary");
  add_common(train_cmd, train_opt, true);

  std::string model_path;
  auto* eval_cmd = app.add_subcommand("eval", "score test trials with a saved model");
  add_common(eval_cmd, eval_opt, true);
  eval_cmd->add_option("--model", model_path, "model snapshot written by train")->required();

  std::string gc_loss = "all";
  std::uint64_t gc_seed = 0;
  std::size_t gc_trials = 20;
  auto* gc_cmd = app.add_subcommand("gradcheck", "compare analytic and numeric gradients");
  gc_cmd->add_option("--loss", gc_loss, "loss name or 'all'")->capture_default_str();
  gc_cmd->add_option("--seed", gc_seed)->capture_default_str();
  gc_cmd->add_option("--trials", gc_trials)->capture_default_str();

  auto* complexity_cmd = app.add_subcommand("complexity", "measure comparison counts over a grid");
  add_common(complexity_cmd, complexity_opt, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return run_train(train_opt);
    if (*eval_cmd) return run_eval(eval_opt, model_path);
    if (*gc_cmd) return run_gradcheck_cmd(gc_loss, gc_seed, gc_trials);
    if (*complexity_cmd) return run_complexity(complexity_opt);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const SamplerError& e) {
    spdlog::error("infeasible configuration: {}", e.what());
    return kExitUsage;
  } catch (const ProbeError& e) {
    spdlog::error("infeasible grid: {}", e.what());
    return kExitUsage;
  } catch (const TrainingDivergedError& e) {
    spdlog::error("training diverged in epoch {}: {}", e.epoch(), e.what());
    return kExitDiverged;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace proxyforge::cli
