#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "proxyforge/batching.hpp"
#include "proxyforge/losses.hpp"

namespace proxyforge {

/// One instrumented epoch: `num_instances` random unit embeddings spread over
/// `num_proxies` classes (one proxy each), visited in num_instances / B
/// batches by the sampler.
struct ProbeConfig {
  LossKind loss = LossKind::kMaskedProxy;
  std::size_t num_instances = 0;  // N
  std::size_t batch_size = 8;     // B
  std::size_t num_proxies = 10;   // P, also the class count
  std::size_t shots_per_class = 2;
  SamplerMode mode = SamplerMode::kBalanced;
  std::size_t dim = 4;
  LossHyperparams hyper{};
  std::uint64_t seed = 0;
};

struct ComparisonCount {
  std::size_t measured = 0;   // summed LossOutput::comparisons
  std::size_t predicted = 0;  // closed form from batch composition
};

/// Closed-form pair-evaluation count of one loss evaluation on `draw`.
std::size_t predicted_batch_comparisons(LossKind loss, const BatchDraw& draw,
                                        std::size_t num_proxies, const LossHyperparams& hyper);

/// Throws SamplerError when the configuration cannot be sampled.
ComparisonCount count_epoch_comparisons(const ProbeConfig& config);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square of fit residuals
};

/// Ordinary least squares y = slope * x + intercept.
LineFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Least squares on (log x, log y). Throws ProbeError on fewer than four
/// points, non-positive values or a constant x.
LineFit loglog_fit(std::span<const double> x, std::span<const double> y);

enum class SweepParam { kInstances, kProxies };

struct SweepSpec {
  LossKind loss = LossKind::kMaskedProxy;
  SweepParam param = SweepParam::kInstances;
  std::vector<std::size_t> values;
  ProbeConfig fixed{};
  /// Whole dataset in one batch: B = N and M = N / P for every grid point.
  bool full_enumeration = false;
};

struct SweepRow {
  LossKind loss{};
  SweepParam param{};
  std::size_t value = 0;
  ComparisonCount count;
};

struct ScalingReport {
  std::vector<SweepRow> rows;
  LineFit loglog;
  LineFit linear;
  bool counts_match = true;  // measured == predicted on every row
};

ScalingReport fit_scaling(const SweepSpec& spec);

std::string_view sweep_param_name(SweepParam p);

/// `loss,param,value,count`
std::string scaling_csv(const std::vector<SweepRow>& rows);

}  // namespace proxyforge
