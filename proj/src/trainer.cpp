#include "proxyforge/trainer.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "proxyforge/errors.hpp"

namespace proxyforge {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(scheduler_factor > 0.0 && scheduler_factor < 1.0))
    throw std::invalid_argument("scheduler_factor must lie in (0, 1)");
  if (scheduler_patience < 1) throw std::invalid_argument("scheduler_patience must be >= 1");
  if (embedding_dim < 2) throw std::invalid_argument("embedding_dim must be >= 2");
  if (train_segment_frames == 0) throw std::invalid_argument("train_segment_frames must be > 0");
  if (!(initial_params.alpha >= kAlphaMin))
    throw std::invalid_argument("initial alpha must be >= alpha_min");
  hyper.validate();
  sampler.validate();
}

PlateauScheduler::PlateauScheduler(double initial_lr, double factor, std::size_t patience)
    : lr_(initial_lr), factor_(factor), patience_(patience) {}

bool PlateauScheduler::step(double metric) {
  if (metric < best_) {
    best_ = metric;
    bad_ = 0;
    return false;
  }
  if (++bad_ < patience_) return false;
  lr_ *= factor_;
  bad_ = 0;
  return true;
}

ModelGradients ModelGradients::zeros_like(const TrainedModel& model) {
  ModelGradients g;
  g.weights = Matrix(model.embedder.weights().rows(), model.embedder.weights().cols());
  g.bias.assign(model.embedder.bias().size(), 0.0);
  g.proxies = Matrix(model.proxies.size(), model.proxies.dim());
  return g;
}

void sgd_step(TrainedModel& model, const ModelGradients& grads, double lr) {
  auto axpy = [lr](std::vector<double>& p, const std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
  };
  axpy(model.embedder.weights().values(), grads.weights.values());
  axpy(model.embedder.bias(), grads.bias);
  axpy(model.proxies.proxies().values(), grads.proxies.values());
  model.params.alpha = std::max(kAlphaMin, model.params.alpha - lr * grads.alpha);
  model.params.beta -= lr * grads.beta;
  model.proxies.renormalize();
}

TrainedModel init_model(const TrainConfig& config, std::size_t feature_dim,
                        const std::vector<ClassId>& train_classes) {
  std::seed_seq seq{config.seed, std::uint64_t{1}};
  std::mt19937_64 seeds(seq);
  const std::uint64_t embedder_seed = seeds();
  const std::uint64_t proxy_seed = seeds();
  return TrainedModel{ToyEmbedder(feature_dim, config.embedding_dim, embedder_seed),
                      init_proxies(train_classes, config.embedding_dim, proxy_seed),
                      config.initial_params};
}

std::vector<Trial> evaluation_trials(const TrainConfig& config, const Split& test) {
  return build_trials(test, config.num_trials, config.seed + 17);
}

double evaluate_eer_percent(const TrainedModel& model, const Split& test,
                            const std::vector<Trial>& trials, const SegmentConfig& segments,
                            std::size_t workers) {
  const auto scores = score_trials(trials, test, model.embedder, segments, workers);
  return 100.0 * compute_eer(split_scores(trials, scores)).eer;
}

namespace {

struct BatchInputs {
  Matrix pooled;  // one pooled feature vector per member
  std::vector<ToyEmbedder::Forward> forward;
};

BatchInputs embed_batch(const BatchDraw& draw, const Split& train, const ToyEmbedder& embedder,
                        std::size_t crop, std::mt19937_64& rng) {
  BatchInputs in;
  in.pooled = Matrix(draw.members.size(), embedder.input_dim());
  in.forward.reserve(draw.members.size());
  for (std::size_t m = 0; m < draw.members.size(); ++m) {
    const Matrix& frames = train.utterances[draw.members[m]].frames;
    const std::size_t len = std::min(crop, frames.rows());
    const std::size_t offset =
        std::uniform_int_distribution<std::size_t>(0, frames.rows() - len)(rng);
    in.pooled.set_row(m, pool_frames(frames, offset, len));
    in.forward.push_back(embedder.forward(in.pooled.row(m)));
  }
  return in;
}

}  // namespace

TrainResult train(const TrainConfig& config, const SyntheticCorpus& corpus) {
  config.validate();
  require_disjoint(corpus.train, corpus.test);
  if (corpus.train.utterances.empty()) throw std::invalid_argument("train split is empty");
  const std::size_t feature_dim = corpus.train.utterances.front().frames.cols();

  const std::vector<ClassId> train_labels = corpus.train.labels();
  const ClassIndex index(train_labels);
  BatchSampler sampler(index, config.sampler);

  TrainResult result{init_model(config, feature_dim, index.classes()), {}};
  TrainedModel& model = result.model;
  if (config.epochs == 0) return result;

  const std::vector<Trial> trials = evaluation_trials(config, corpus.test);
  PlateauScheduler scheduler(config.learning_rate, config.scheduler_factor,
                             config.scheduler_patience);
  const bool update_proxies = uses_proxies(config.loss);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::seed_seq crop_seq{config.seed, static_cast<std::uint64_t>(epoch), std::uint64_t{2}};
    std::mt19937_64 crop_rng(crop_seq);
    const double lr = scheduler.learning_rate();
    double loss_sum = 0.0;
    std::size_t batches = 0;

    double eer = 0.0;
    try {
      for (const BatchDraw& draw : sampler.epoch(epoch)) {
        BatchInputs in = embed_batch(draw, corpus.train, model.embedder,
                                     config.train_segment_frames, crop_rng);
        Matrix embeddings(draw.members.size(), config.embedding_dim);
        for (std::size_t m = 0; m < in.forward.size(); ++m)
          embeddings.set_row(m, in.forward[m].unit);
        const Minibatch batch = draw.materialize(std::move(embeddings));

        const LossOutput out =
            evaluate_loss(config.loss, batch, model.proxies, model.params, config.hyper);
        if (!out.all_finite())
          throw TrainingDivergedError(
              epoch + 1, fmt::format("non-finite loss or gradient in epoch {}", epoch + 1));
        loss_sum += out.value;
        ++batches;

        ModelGradients grads = ModelGradients::zeros_like(model);
        for (std::size_t m = 0; m < in.forward.size(); ++m)
          model.embedder.accumulate_backward(in.pooled.row(m), in.forward[m],
                                             out.grad_embeddings.row(m), grads.weights,
                                             grads.bias);
        if (update_proxies) grads.proxies = out.grad_proxies;
        grads.alpha = out.grad_alpha;
        grads.beta = out.grad_beta;
        sgd_step(model, grads, lr);
      }

      eer = evaluate_eer_percent(model, corpus.test, trials, config.segments, config.workers);
    } catch (const NormalizationError& e) {
      // Weights blew up far enough that an embedding lost its direction.
      throw TrainingDivergedError(epoch + 1, fmt::format("epoch {}: {}", epoch + 1, e.what()));
    }
    const double mean_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, batches));
    result.log.push_back({epoch + 1, mean_loss, lr, eer});
    result.best_eer_percent = std::min(result.best_eer_percent, eer);
    spdlog::debug("{} epoch {}: loss {:.6f} lr {:.5f} EER {:.3f}% alpha {:.3f} beta {:.3f}",
                  loss_name(config.loss), epoch + 1, mean_loss, lr, eer, model.params.alpha,
                  model.params.beta);
    if (scheduler.step(eer))
      spdlog::debug("plateau: learning rate reduced to {}", scheduler.learning_rate());
  }
  return result;
}

std::string metrics_csv(const std::vector<EpochMetrics>& log) {
  std::string out = "epoch,loss,lr,eer_percent\n";
  for (const auto& m : log) out += fmt::format("{},{},{},{}\n", m.epoch, m.loss, m.lr, m.eer_percent);
  return out;
}

}  // namespace proxyforge
