#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "proxyforge/batching.hpp"
#include "proxyforge/dataset.hpp"
#include "proxyforge/embedder.hpp"
#include "proxyforge/evaluation.hpp"
#include "proxyforge/losses.hpp"

namespace proxyforge {

struct TrainConfig {
  LossKind loss = LossKind::kMaskedProxy;
  LossHyperparams hyper{};
  SamplerConfig sampler{};
  double learning_rate = 0.2;
  double scheduler_factor = 0.8;
  std::size_t scheduler_patience = 3;
  std::size_t epochs = 10;
  std::size_t embedding_dim = 16;
  std::size_t train_segment_frames = 20;  // random crop length during training
  SimilarityParams initial_params{10.0, 0.1};
  SegmentConfig segments{};
  std::size_t num_trials = 600;
  std::size_t workers = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Reduce-on-plateau over a metric where lower is better. A step counts as an
/// improvement only when the metric is strictly below the best seen so far;
/// after `patience` consecutive non-improving steps the rate is multiplied by
/// `factor` and the counter restarts.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, double factor, std::size_t patience);

  /// Returns true when this step reduced the learning rate.
  bool step(double metric);

  double learning_rate() const noexcept { return lr_; }
  std::size_t bad_epochs() const noexcept { return bad_; }

 private:
  double lr_;
  double factor_;
  std::size_t patience_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t bad_ = 0;
};

struct TrainedModel {
  ToyEmbedder embedder;
  ProxyTable proxies;
  SimilarityParams params;
};

struct ModelGradients {
  Matrix weights;
  Vec bias;
  Matrix proxies;
  double alpha = 0.0;
  double beta = 0.0;

  static ModelGradients zeros_like(const TrainedModel& model);
};

/// p <- p - lr * g for every learnable tensor, then alpha >= kAlphaMin and
/// unit-length proxies.
void sgd_step(TrainedModel& model, const ModelGradients& grads, double lr);

TrainedModel init_model(const TrainConfig& config, std::size_t feature_dim,
                        const std::vector<ClassId>& train_classes);

struct EpochMetrics {
  std::size_t epoch = 0;       // 1-based
  double loss = 0.0;           // mean batch loss
  double lr = 0.0;             // rate used during the epoch
  double eer_percent = 0.0;    // test EER after the epoch
};

struct TrainResult {
  TrainedModel model;
  std::vector<EpochMetrics> log;
  double best_eer_percent = std::numeric_limits<double>::infinity();
};

/// Runs sampler -> embedder -> loss -> SGD for `config.epochs` epochs and
/// tracks test EER after each. Throws TrainingDivergedError on a non-finite
/// loss and std::logic_error if train and test classes overlap.
TrainResult train(const TrainConfig& config, const SyntheticCorpus& corpus);

/// The fixed trial list scored after every epoch and by `eval`.
std::vector<Trial> evaluation_trials(const TrainConfig& config, const Split& test);

/// EER (percent) of a model on the corpus test split with a fixed trial list.
double evaluate_eer_percent(const TrainedModel& model, const Split& test,
                            const std::vector<Trial>& trials, const SegmentConfig& segments,
                            std::size_t workers = 1);

/// `epoch,loss,lr,eer_percent`
std::string metrics_csv(const std::vector<EpochMetrics>& log);

}  // namespace proxyforge
