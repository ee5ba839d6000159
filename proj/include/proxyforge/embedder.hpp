#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "proxyforge/embedding.hpp"

namespace proxyforge {

/// normalize(W x + b): the stand-in backbone.
class ToyEmbedder {
 public:
  ToyEmbedder() = default;
  /// W ~ N(0, 1/input_dim), b = 0.
  ToyEmbedder(std::size_t input_dim, std::size_t output_dim, std::uint64_t seed);
  ToyEmbedder(Matrix weights, Vec bias);

  std::size_t input_dim() const noexcept { return weights_.cols(); }
  std::size_t output_dim() const noexcept { return weights_.rows(); }

  Matrix& weights() noexcept { return weights_; }
  const Matrix& weights() const noexcept { return weights_; }
  Vec& bias() noexcept { return bias_; }
  const Vec& bias() const noexcept { return bias_; }

  struct Forward {
    Vec unit;
    double norm = 0.0;  // ||W x + b||
  };
  Forward forward(std::span<const double> input) const;
  Vec embed(std::span<const double> input) const { return forward(input).unit; }

  /// Accumulates dL/dW and dL/db from dL/d(unit output).
  void accumulate_backward(std::span<const double> input, const Forward& fwd,
                           std::span<const double> grad_unit, Matrix& grad_weights,
                           Vec& grad_bias) const;

  bool operator==(const ToyEmbedder&) const = default;

 private:
  Matrix weights_;
  Vec bias_;
};

}  // namespace proxyforge
