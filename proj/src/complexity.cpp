#include "proxyforge/complexity.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>
#include <random>

#include "proxyforge/errors.hpp"

namespace proxyforge {

std::size_t predicted_batch_comparisons(LossKind loss, const BatchDraw& draw,
                                        std::size_t num_proxies, const LossHyperparams& hyper) {
  const std::size_t n = draw.members.size();
  const std::size_t c = draw.num_classes();
  switch (loss) {
    case LossKind::kMaskedProxy:
    case LossKind::kMultinomialMaskedProxy: {
      // Each query meets its own centroid, c - 1 other centroids and P - c
      // unmasked proxies; the regulator compares every proxy with c centroids.
      const std::size_t l1 = c * num_proxies;
      const std::size_t l2 = hyper.lambda_balance != 0.0 ? c * c : 0;
      return l1 + l2;
    }
    case LossKind::kProxyNca:
    case LossKind::kProxyAnchor:
      return n * num_proxies;
    case LossKind::kTriplet: {
      std::map<ClassId, std::size_t> sizes;
      for (ClassId l : draw.labels) ++sizes[l];
      std::size_t triplets = 0;
      for (ClassId l : draw.labels) triplets += (sizes[l] - 1) * (n - sizes[l]);
      return 2 * triplets;
    }
    case LossKind::kPrototypical:
    case LossKind::kAngularPrototypical:
      return c * c;
    case LossKind::kGe2e:
      return n * c;
  }
  return 0;
}

ComparisonCount count_epoch_comparisons(const ProbeConfig& config) {
  ComparisonCount out;
  if (config.num_instances == 0) return out;
  if (config.num_proxies == 0) throw SamplerError("probe needs at least one class");

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<ClassId> labels(config.num_instances);
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels[i] = static_cast<ClassId>(i % config.num_proxies);
  Matrix embeddings(config.num_instances, config.dim);
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    auto r = embeddings.row(i);
    for (double& v : r) v = gauss(rng);
    const Vec u = l2_normalize(r);
    std::copy(u.begin(), u.end(), r.begin());
  }
  const ProxyTable proxies = init_proxies(config.num_proxies, config.dim, config.seed + 1);
  const SimilarityParams params{};

  const ClassIndex index(labels);
  SamplerConfig sc;
  sc.mode = config.mode;
  sc.shots_per_class = config.shots_per_class;
  sc.expected_batch_size = config.batch_size;
  sc.seed = config.seed;
  BatchSampler sampler(index, sc);

  // Per-batch counts are reduced in batch order.
  for (const BatchDraw& draw : sampler.epoch(0)) {
    Matrix rows(draw.members.size(), config.dim);
    for (std::size_t m = 0; m < draw.members.size(); ++m)
      rows.set_row(m, embeddings.row(draw.members[m]));
    const Minibatch batch = draw.materialize(std::move(rows));
    out.measured += evaluate_loss(config.loss, batch, proxies, params, config.hyper).comparisons;
    out.predicted += predicted_batch_comparisons(config.loss, draw, config.num_proxies, config.hyper);
  }
  return out;
}

LineFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ProbeError("fit needs matching points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ProbeError("fit needs at least two distinct x values");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

LineFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ProbeError("log-log fit: mismatched grid");
  if (x.size() < 4) throw ProbeError("log-log fit needs at least four grid points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ProbeError("log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return linear_fit(lx, ly);
}

std::string_view sweep_param_name(SweepParam p) {
  return p == SweepParam::kInstances ? "N" : "P";
}

ScalingReport fit_scaling(const SweepSpec& spec) {
  if (spec.values.size() < 4) throw ProbeError("scaling grid needs at least four sizes");
  ScalingReport report;
  std::vector<double> xs, ys;
  for (std::size_t v : spec.values) {
    ProbeConfig cfg = spec.fixed;
    cfg.loss = spec.loss;
    if (spec.param == SweepParam::kInstances)
      cfg.num_instances = v;
    else
      cfg.num_proxies = v;
    if (spec.full_enumeration) {
      if (cfg.num_proxies == 0 || cfg.num_instances % cfg.num_proxies != 0)
        throw ProbeError("full enumeration needs N divisible by the class count");
      cfg.batch_size = cfg.num_instances;
      cfg.shots_per_class = cfg.num_instances / cfg.num_proxies;
      cfg.mode = SamplerMode::kBalanced;
    }
    const ComparisonCount count = count_epoch_comparisons(cfg);
    report.rows.push_back({spec.loss, spec.param, v, count});
    report.counts_match = report.counts_match && count.measured == count.predicted;
    xs.push_back(static_cast<double>(v));
    ys.push_back(static_cast<double>(count.measured));
  }
  report.loglog = loglog_fit(xs, ys);
  report.linear = linear_fit(xs, ys);
  return report;
}

std::string scaling_csv(const std::vector<SweepRow>& rows) {
  std::string out = "loss,param,value,count\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{}\n", loss_name(r.loss), sweep_param_name(r.param), r.value,
                       r.count.measured);
  return out;
}

}  // namespace proxyforge
