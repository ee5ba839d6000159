#include "proxyforge/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "proxyforge/errors.hpp"

namespace proxyforge {

using nlohmann::json;

namespace {

using Preset = std::function<void(ExperimentConfig&)>;

void balanced(ExperimentConfig& c, LossKind loss, std::size_t shots) {
  c.train.loss = loss;
  c.train.sampler.mode = SamplerMode::kBalanced;
  c.train.sampler.shots_per_class = shots;
  c.train.hyper.shots_per_class = shots;
}

const std::map<std::string, Preset>& loss_presets() {
  static const std::map<std::string, Preset> presets = {
      {"mp", [](ExperimentConfig& c) {
         c.train.loss = LossKind::kMaskedProxy;
         c.train.sampler.mode = SamplerMode::kVariable;
         c.train.hyper.lambda_balance = kDefaultLambda;
       }},
      {"mmp", [](ExperimentConfig& c) {
         c.train.loss = LossKind::kMultinomialMaskedProxy;
         c.train.sampler.mode = SamplerMode::kVariable;
         c.train.hyper.lambda_balance = kDefaultLambda;
       }},
      {"mp_balance", [](ExperimentConfig& c) {
         balanced(c, LossKind::kMaskedProxy, 2);
         c.train.hyper.lambda_balance = kDefaultLambda;
       }},
      {"mmp_balance", [](ExperimentConfig& c) {
         balanced(c, LossKind::kMultinomialMaskedProxy, 2);
         c.train.hyper.lambda_balance = kDefaultLambda;
       }},
      {"mp_balance_lambda05", [](ExperimentConfig& c) {
         balanced(c, LossKind::kMaskedProxy, 2);
         c.train.hyper.lambda_balance = kTextLambda;
       }},
      {"mmp_balance_lambda05", [](ExperimentConfig& c) {
         balanced(c, LossKind::kMultinomialMaskedProxy, 2);
         c.train.hyper.lambda_balance = kTextLambda;
       }},
      {"triplet", [](ExperimentConfig& c) {
         balanced(c, LossKind::kTriplet, 2);
         c.train.hyper.triplet_margin = 0.1;
       }},
      {"prototypical", [](ExperimentConfig& c) { balanced(c, LossKind::kPrototypical, 2); }},
      {"ge2e", [](ExperimentConfig& c) { balanced(c, LossKind::kGe2e, 3); }},
      {"angular_prototypical",
       [](ExperimentConfig& c) { balanced(c, LossKind::kAngularPrototypical, 2); }},
      {"proxy_nca", [](ExperimentConfig& c) { balanced(c, LossKind::kProxyNca, 2); }},
      {"proxy_anchor", [](ExperimentConfig& c) {
         balanced(c, LossKind::kProxyAnchor, 2);
         c.train.hyper.anchor_margin = 0.15;
         c.train.hyper.anchor_scale = 50.0;
       }},
  };
  return presets;
}

// Training segment length stands in for audio duration; batch sizes are the
// expected batch sizes of the three reported experiments. The class count is
// raised so that either sampler can fill a batch.
const std::map<std::string, Preset>& experiment_presets() {
  static const std::map<std::string, Preset> presets = {
      {"desk", [](ExperimentConfig&) {}},
      {"e1", [](ExperimentConfig& c) {
         c.train.train_segment_frames = 20;
         c.train.sampler.expected_batch_size = 400;
         c.dataset.train_classes = 400;
         c.dataset.train_instances_per_class = 4;
       }},
      {"e2", [](ExperimentConfig& c) {
         c.train.train_segment_frames = 20;
         c.train.sampler.expected_batch_size = 800;
         c.dataset.train_classes = 800;
         c.dataset.train_instances_per_class = 4;
       }},
      {"e3", [](ExperimentConfig& c) {
         c.train.train_segment_frames = 40;
         c.train.sampler.expected_batch_size = 400;
         c.dataset.train_classes = 400;
         c.dataset.train_instances_per_class = 4;
       }},
  };
  return presets;
}

template <typename T>
T get_as(const json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

std::size_t get_size(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(fmt::format("config key '{}' must be a non-negative integer", key));
  return v.get<std::size_t>();
}

double get_real(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_number()) throw ConfigError(fmt::format("config key '{}' must be a number", key));
  return v.get<double>();
}

std::uint64_t get_seed(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(fmt::format("config key '{}' must be a non-negative integer", key));
  return v.get<std::uint64_t>();
}

}  // namespace

std::vector<std::string> loss_preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : loss_presets()) out.push_back(name);
  return out;
}

std::vector<std::string> experiment_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : experiment_presets()) out.push_back(name);
  return out;
}

ExperimentConfig parse_experiment_config(const json& doc,
                                         std::optional<std::uint64_t> seed_override) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  using Setter = std::function<void(ExperimentConfig&, const json&, const std::string&)>;
  auto size_key = [](std::size_t& (*field)(ExperimentConfig&)) {
    return Setter([field](ExperimentConfig& c, const json& d, const std::string& k) {
      field(c) = get_size(d, k);
    });
  };
  auto real_key = [](double& (*field)(ExperimentConfig&)) {
    return Setter([field](ExperimentConfig& c, const json& d, const std::string& k) {
      field(c) = get_real(d, k);
    });
  };

  const std::map<std::string, Setter> keys = {
      {"seed", [](ExperimentConfig&, const json&, const std::string&) {}},
      {"preset", [](ExperimentConfig&, const json&, const std::string&) {}},
      {"experiment", [](ExperimentConfig&, const json&, const std::string&) {}},
      {"loss", [](ExperimentConfig& c, const json& d, const std::string& k) {
         const auto name = get_as<std::string>(d, k);
         auto kind = parse_loss_kind(name);
         if (!kind) throw ConfigError(fmt::format("unknown loss '{}'", name));
         c.train.loss = *kind;
       }},
      {"sampler", [](ExperimentConfig& c, const json& d, const std::string& k) {
         const auto name = get_as<std::string>(d, k);
         if (name == "balanced") c.train.sampler.mode = SamplerMode::kBalanced;
         else if (name == "variable") c.train.sampler.mode = SamplerMode::kVariable;
         else throw ConfigError(fmt::format("unknown sampler '{}'", name));
       }},
      {"shots_per_class", [](ExperimentConfig& c, const json& d, const std::string& k) {
         c.train.sampler.shots_per_class = c.train.hyper.shots_per_class = get_size(d, k);
       }},
      {"batch_size", size_key([](ExperimentConfig& c) -> std::size_t& {
         return c.train.sampler.expected_batch_size; })},
      {"lambda", real_key([](ExperimentConfig& c) -> double& { return c.train.hyper.lambda_balance; })},
      {"triplet_margin", real_key([](ExperimentConfig& c) -> double& { return c.train.hyper.triplet_margin; })},
      {"anchor_margin", real_key([](ExperimentConfig& c) -> double& { return c.train.hyper.anchor_margin; })},
      {"anchor_scale", real_key([](ExperimentConfig& c) -> double& { return c.train.hyper.anchor_scale; })},
      {"learning_rate", real_key([](ExperimentConfig& c) -> double& { return c.train.learning_rate; })},
      {"scheduler_factor", real_key([](ExperimentConfig& c) -> double& { return c.train.scheduler_factor; })},
      {"scheduler_patience", size_key([](ExperimentConfig& c) -> std::size_t& { return c.train.scheduler_patience; })},
      {"epochs", size_key([](ExperimentConfig& c) -> std::size_t& { return c.train.epochs; })},
      {"embedding_dim", size_key([](ExperimentConfig& c) -> std::size_t& { return c.train.embedding_dim; })},
      {"train_segment_frames", size_key([](ExperimentConfig& c) -> std::size_t& { return c.train.train_segment_frames; })},
      {"alpha_init", real_key([](ExperimentConfig& c) -> double& { return c.train.initial_params.alpha; })},
      {"beta_init", real_key([](ExperimentConfig& c) -> double& { return c.train.initial_params.beta; })},
      {"num_trials", size_key([](ExperimentConfig& c) -> std::size_t& { return c.train.num_trials; })},
      {"num_segments", size_key([](ExperimentConfig& c) -> std::size_t& { return c.train.segments.num_segments; })},
      {"segment_length", size_key([](ExperimentConfig& c) -> std::size_t& { return c.train.segments.segment_length; })},
      {"workers", size_key([](ExperimentConfig& c) -> std::size_t& { return c.train.workers; })},
      {"train_classes", size_key([](ExperimentConfig& c) -> std::size_t& { return c.dataset.train_classes; })},
      {"test_classes", size_key([](ExperimentConfig& c) -> std::size_t& { return c.dataset.test_classes; })},
      {"train_instances_per_class", size_key([](ExperimentConfig& c) -> std::size_t& { return c.dataset.train_instances_per_class; })},
      {"test_instances_per_class", size_key([](ExperimentConfig& c) -> std::size_t& { return c.dataset.test_instances_per_class; })},
      {"feature_dim", size_key([](ExperimentConfig& c) -> std::size_t& { return c.dataset.feature_dim; })},
      {"class_subspace_dim", size_key([](ExperimentConfig& c) -> std::size_t& { return c.dataset.class_subspace_dim; })},
      {"min_frames", size_key([](ExperimentConfig& c) -> std::size_t& { return c.dataset.min_frames; })},
      {"max_frames", size_key([](ExperimentConfig& c) -> std::size_t& { return c.dataset.max_frames; })},
      {"spread", real_key([](ExperimentConfig& c) -> double& { return c.dataset.spread; })},
      {"frame_noise_ratio", real_key([](ExperimentConfig& c) -> double& { return c.dataset.frame_noise_ratio; })},
      {"dataset_seed", [](ExperimentConfig& c, const json& d, const std::string& k) {
         c.dataset.seed = get_seed(d, k);
       }},
  };

  for (const auto& [k, _] : doc.items())
    if (!keys.contains(k)) throw ConfigError(fmt::format("unknown config key '{}'", k));

  ExperimentConfig cfg;
  if (seed_override) {
    cfg.seed = *seed_override;
  } else if (doc.contains("seed")) {
    cfg.seed = get_seed(doc, "seed");
  } else {
    throw ConfigError("config must define 'seed'");
  }
  cfg.dataset.seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  cfg.train.sampler.seed = cfg.seed;

  if (doc.contains("experiment")) cfg.experiment = get_as<std::string>(doc, "experiment");
  auto exp = experiment_presets().find(cfg.experiment);
  if (exp == experiment_presets().end())
    throw ConfigError(fmt::format("unknown experiment '{}'", cfg.experiment));
  exp->second(cfg);

  if (doc.contains("preset")) {
    cfg.preset = get_as<std::string>(doc, "preset");
    auto p = loss_presets().find(cfg.preset);
    if (p == loss_presets().end()) throw ConfigError(fmt::format("unknown preset '{}'", cfg.preset));
    p->second(cfg);
  }

  for (const auto& [k, setter] : keys)
    if (doc.contains(k)) setter(cfg, doc, k);

  if (cfg.train.train_segment_frames > cfg.dataset.min_frames)
    throw ConfigError("train_segment_frames exceeds min_frames");
  if (cfg.train.segments.segment_length > cfg.dataset.min_frames)
    throw ConfigError("segment_length exceeds min_frames");
  try {
    cfg.dataset.validate();
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const SamplerError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        std::optional<std::uint64_t> seed_override) {
  return parse_experiment_config(read_json_file(path), seed_override);
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows) {
  const auto data = rows.get<std::vector<std::vector<double>>>();
  if (data.empty()) return {};
  Matrix m(data.size(), data.front().size());
  for (std::size_t r = 0; r < data.size(); ++r) m.set_row(r, data[r]);
  return m;
}

}  // namespace

json model_to_json(const TrainedModel& model) {
  return json{
      {"embedder",
       {{"weights", matrix_to_json(model.embedder.weights())}, {"bias", model.embedder.bias()}}},
      {"proxies",
       {{"class_ids", model.proxies.class_ids()}, {"vectors", matrix_to_json(model.proxies.proxies())}}},
      {"alpha", model.params.alpha},
      {"beta", model.params.beta},
  };
}

TrainedModel model_from_json(const json& doc) {
  try {
    ToyEmbedder embedder(matrix_from_json(doc.at("embedder").at("weights")),
                         doc.at("embedder").at("bias").get<Vec>());
    ProxyTable proxies(matrix_from_json(doc.at("proxies").at("vectors")),
                       doc.at("proxies").at("class_ids").get<std::vector<ClassId>>());
    return TrainedModel{std::move(embedder), std::move(proxies),
                        SimilarityParams{doc.at("alpha").get<double>(), doc.at("beta").get<double>()}};
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed model snapshot: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("malformed model snapshot: {}", e.what()));
  }
}

ComplexityGrid parse_complexity_grid(const json& doc, std::optional<std::uint64_t> seed_override) {
  if (!doc.is_object() || !doc.contains("sweeps") || !doc.at("sweeps").is_array())
    throw ConfigError("complexity grid needs a 'sweeps' array");
  static const std::set<std::string> top = {"seed", "dim", "sweeps"};
  static const std::set<std::string> sweep_keys = {
      "loss", "param", "values", "instances", "proxies", "batch_size", "shots_per_class",
      "sampler", "lambda", "full_enumeration"};
  for (const auto& [k, _] : doc.items())
    if (!top.contains(k)) throw ConfigError(fmt::format("unknown grid key '{}'", k));

  std::uint64_t seed = 0;
  if (seed_override) seed = *seed_override;
  else if (doc.contains("seed")) seed = get_seed(doc, "seed");
  else throw ConfigError("complexity grid must define 'seed'");
  const std::size_t dim = doc.contains("dim") ? get_size(doc, "dim") : 4;
  if (dim < 2) throw ConfigError("grid 'dim' must be >= 2");

  ComplexityGrid grid;
  for (const json& s : doc.at("sweeps")) {
    if (!s.is_object()) throw ConfigError("each sweep must be an object");
    for (const auto& [k, _] : s.items())
      if (!sweep_keys.contains(k)) throw ConfigError(fmt::format("unknown sweep key '{}'", k));
    SweepSpec spec;
    const auto name = get_as<std::string>(s, "loss");
    auto kind = parse_loss_kind(name);
    if (!kind) throw ConfigError(fmt::format("unknown loss '{}'", name));
    spec.loss = *kind;
    const auto param = get_as<std::string>(s, "param");
    if (param == "N") spec.param = SweepParam::kInstances;
    else if (param == "P") spec.param = SweepParam::kProxies;
    else throw ConfigError(fmt::format("sweep param must be 'N' or 'P', got '{}'", param));
    for (const json& v : s.at("values")) {
      if (!v.is_number_integer() || v.get<long long>() <= 0)
        throw ConfigError("sweep values must be positive integers");
      spec.values.push_back(v.get<std::size_t>());
    }
    spec.fixed.loss = spec.loss;
    spec.fixed.seed = seed;
    spec.fixed.dim = dim;
    if (s.contains("instances")) spec.fixed.num_instances = get_size(s, "instances");
    if (s.contains("proxies")) spec.fixed.num_proxies = get_size(s, "proxies");
    if (s.contains("batch_size")) spec.fixed.batch_size = get_size(s, "batch_size");
    if (s.contains("shots_per_class")) spec.fixed.shots_per_class = get_size(s, "shots_per_class");
    if (s.contains("lambda")) spec.fixed.hyper.lambda_balance = get_real(s, "lambda");
    if (s.contains("sampler")) {
      const auto mode = get_as<std::string>(s, "sampler");
      if (mode == "balanced") spec.fixed.mode = SamplerMode::kBalanced;
      else if (mode == "variable") spec.fixed.mode = SamplerMode::kVariable;
      else throw ConfigError(fmt::format("unknown sampler '{}'", mode));
    }
    if (s.contains("full_enumeration")) spec.full_enumeration = get_as<bool>(s, "full_enumeration");
    grid.sweeps.push_back(std::move(spec));
  }
  return grid;
}

}  // namespace proxyforge
