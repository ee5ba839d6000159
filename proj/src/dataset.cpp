#include "proxyforge/dataset.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace proxyforge {

void DatasetConfig::validate() const {
  if (feature_dim < 2) throw std::invalid_argument("feature_dim must be >= 2");
  if (class_subspace_dim == 1 || class_subspace_dim > feature_dim)
    throw std::invalid_argument("class_subspace_dim must be 0 or in [2, feature_dim]");
  if (!(spread > 0.0)) throw std::invalid_argument("spread must be > 0");
  if (frame_noise_ratio < 0.0) throw std::invalid_argument("frame_noise_ratio must be >= 0");
  if (min_frames == 0 || min_frames > max_frames)
    throw std::invalid_argument("frame range must satisfy 0 < min_frames <= max_frames");
}

std::vector<ClassId> Split::labels() const {
  std::vector<ClassId> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) out.push_back(u.label);
  return out;
}

std::vector<ClassId> Split::class_ids() const {
  std::set<ClassId> ids;
  for (const auto& u : utterances) ids.insert(u.label);
  return {ids.begin(), ids.end()};
}

namespace {

void fill_split(Split& split, std::size_t first_class, std::size_t num_classes,
                std::size_t per_class, const DatasetConfig& cfg, const Matrix& means,
                std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> frames(cfg.min_frames, cfg.max_frames);
  const double frame_sigma = cfg.spread * cfg.frame_noise_ratio;
  Vec centre(cfg.feature_dim);
  for (std::size_t k = first_class; k < first_class + num_classes; ++k) {
    auto mu = means.row(k);
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t d = 0; d < cfg.feature_dim; ++d) centre[d] = mu[d] + cfg.spread * gauss(rng);
      Utterance u{static_cast<ClassId>(k), Matrix(frames(rng), cfg.feature_dim)};
      for (std::size_t t = 0; t < u.frames.rows(); ++t)
        for (std::size_t d = 0; d < cfg.feature_dim; ++d)
          u.frames(t, d) = centre[d] + frame_sigma * gauss(rng);
      split.utterances.push_back(std::move(u));
    }
  }
}

}  // namespace

SyntheticCorpus generate_dataset(const DatasetConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticCorpus corpus;
  const std::size_t total = config.train_classes + config.test_classes;
  const std::size_t rank =
      config.class_subspace_dim == 0 ? config.feature_dim : config.class_subspace_dim;

  // Orthonormal basis of the class subspace (Gram-Schmidt on Gaussian draws).
  Matrix basis(rank, config.feature_dim);
  for (std::size_t b = 0; b < rank; ++b) {
    auto r = basis.row(b);
    double n = 0.0;
    while (n < 1e-6) {
      for (double& v : r) v = gauss(rng);
      for (std::size_t prev = 0; prev < b; ++prev) {
        const double proj = dot(r, basis.row(prev));
        auto q = basis.row(prev);
        for (std::size_t d = 0; d < r.size(); ++d) r[d] -= proj * q[d];
      }
      n = l2_norm(r);
    }
    for (double& v : r) v /= n;
  }

  corpus.class_means = Matrix(total, config.feature_dim);
  Vec coeff(rank);
  for (std::size_t k = 0; k < total; ++k) {
    for (double& c : coeff) c = gauss(rng);
    const Vec unit = l2_normalize(coeff);
    auto r = corpus.class_means.row(k);
    for (std::size_t b = 0; b < rank; ++b) {
      auto q = basis.row(b);
      for (std::size_t d = 0; d < r.size(); ++d) r[d] += unit[b] * q[d];
    }
  }
  fill_split(corpus.train, 0, config.train_classes, config.train_instances_per_class, config,
             corpus.class_means, rng);
  fill_split(corpus.test, config.train_classes, config.test_classes,
             config.test_instances_per_class, config, corpus.class_means, rng);
  return corpus;
}

void require_disjoint(const Split& train, const Split& test) {
  const auto a = train.class_ids();
  const auto b = test.class_ids();
  std::vector<ClassId> shared;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(shared));
  if (!shared.empty())
    throw std::logic_error("open-set violation: class " + std::to_string(shared.front()) +
                           " appears in both train and test splits");
}

Vec pool_frames(const Matrix& frames, std::size_t offset, std::size_t length) {
  if (length == 0 || offset + length > frames.rows())
    throw std::out_of_range("pool_frames: window exceeds utterance");
  Vec out(frames.cols(), 0.0);
  for (std::size_t t = offset; t < offset + length; ++t) {
    auto f = frames.row(t);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += f[d];
  }
  const double inv = 1.0 / static_cast<double>(length);
  for (double& v : out) v *= inv;
  return out;
}

}  // namespace proxyforge
