#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "proxyforge/embedding.hpp"
#include "proxyforge/losses.hpp"

namespace proxyforge {

/// Central differences (f(x+e) - f(x-e)) / 2e for every coordinate of x.
Vec central_difference(const std::function<double(std::span<const double>)>& f,
                       std::span<const double> x, double epsilon);

/// Everything a loss differentiates with respect to.
struct LossInputs {
  Minibatch batch;
  ProxyTable proxies;
  SimilarityParams params;
};

using LossFn = std::function<double(const LossInputs&)>;

struct NumericGradient {
  Matrix embeddings;
  Matrix proxies;
  double alpha = 0.0;
  double beta = 0.0;
};

NumericGradient finite_difference_gradient(const LossFn& loss, const LossInputs& inputs,
                                           double epsilon);

/// Relative error per parameter group: max|a - n| / max(max|a|, max|n|, floor).
/// The floor keeps groups whose true gradient is zero from dividing noise by noise.
struct GroupErrors {
  double embeddings = 0.0;
  double proxies = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  double max() const;
  void absorb(const GroupErrors& other);
};

inline constexpr double kGradcheckFloor = 1e-4;

GroupErrors relative_errors(const LossOutput& analytic, const NumericGradient& numeric);

struct GradcheckConfig {
  std::size_t dim = 8;
  std::size_t batch_classes = 6;
  std::size_t num_proxies = 10;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  /// Hinge losses are redrawn until every hinge argument is at least this far
  /// from zero, since no derivative exists at the kink.
  double kink_clearance = 1e-3;
  LossHyperparams hyper{};
};

/// A random batch (2 or 3 instances per class, unit rows), proxy table and
/// similarity parameters.
LossInputs random_loss_inputs(std::uint64_t seed, const GradcheckConfig& config);

/// Smallest |d(a,p) - d(a,n) + margin| over all triplets in the batch.
double triplet_kink_distance(const Matrix& instances, std::span<const ClassId> labels,
                             double margin);

struct GradcheckReport {
  LossKind kind{};
  std::size_t trials = 0;
  GroupErrors worst;
  bool passed = true;
};

GradcheckReport run_gradcheck(LossKind kind, std::uint64_t seed, std::size_t trials,
                              const GradcheckConfig& config = {});

}  // namespace proxyforge
