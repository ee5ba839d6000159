#include "proxyforge/embedder.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "proxyforge/errors.hpp"

namespace proxyforge {

ToyEmbedder::ToyEmbedder(std::size_t input_dim, std::size_t output_dim, std::uint64_t seed)
    : weights_(output_dim, input_dim), bias_(output_dim, 0.0) {
  if (input_dim == 0 || output_dim < 2)
    throw std::invalid_argument("ToyEmbedder: need input_dim >= 1 and output_dim >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(input_dim)));
  for (double& w : weights_.values()) w = gauss(rng);
}

ToyEmbedder::ToyEmbedder(Matrix weights, Vec bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (bias_.size() != weights_.rows())
    throw std::invalid_argument("ToyEmbedder: bias length must equal output dim");
}

ToyEmbedder::Forward ToyEmbedder::forward(std::span<const double> input) const {
  if (input.size() != input_dim()) throw std::invalid_argument("ToyEmbedder: input width mismatch");
  Vec raw(bias_);
  for (std::size_t r = 0; r < raw.size(); ++r) raw[r] += dot(weights_.row(r), input);
  Forward out;
  out.norm = l2_norm(raw);
  out.unit = l2_normalize(raw);
  return out;
}

void ToyEmbedder::accumulate_backward(std::span<const double> input, const Forward& fwd,
                                      std::span<const double> grad_unit, Matrix& grad_weights,
                                      Vec& grad_bias) const {
  Vec grad_raw(output_dim(), 0.0);
  accumulate_normalize_backward(grad_unit, fwd.unit, fwd.norm, grad_raw);
  for (std::size_t r = 0; r < grad_raw.size(); ++r) {
    grad_bias[r] += grad_raw[r];
    auto gw = grad_weights.row(r);
    for (std::size_t c = 0; c < input.size(); ++c) gw[c] += grad_raw[r] * input[c];
  }
}

}  // namespace proxyforge
