#include "proxyforge/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace proxyforge {

Vec central_difference(const std::function<double(std::span<const double>)>& f,
                       std::span<const double> x, double epsilon) {
  Vec probe(x.begin(), x.end());
  Vec grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + epsilon;
    const double up = f(probe);
    probe[i] = orig - epsilon;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

NumericGradient finite_difference_gradient(const LossFn& loss, const LossInputs& inputs,
                                           double epsilon) {
  NumericGradient out;
  const Matrix& emb = inputs.batch.instances();
  const Matrix& prox = inputs.proxies.proxies();

  auto over_embeddings = [&](std::span<const double> flat) {
    Matrix m(emb.rows(), emb.cols());
    std::copy(flat.begin(), flat.end(), m.values().begin());
    return loss(LossInputs{inputs.batch.with_instances(std::move(m)), inputs.proxies,
                           inputs.params});
  };
  Vec g = central_difference(over_embeddings, emb.values(), epsilon);
  out.embeddings = Matrix(emb.rows(), emb.cols());
  out.embeddings.values() = std::move(g);

  auto over_proxies = [&](std::span<const double> flat) {
    Matrix m(prox.rows(), prox.cols());
    std::copy(flat.begin(), flat.end(), m.values().begin());
    return loss(LossInputs{inputs.batch, ProxyTable(std::move(m), inputs.proxies.class_ids()),
                           inputs.params});
  };
  g = central_difference(over_proxies, prox.values(), epsilon);
  out.proxies = Matrix(prox.rows(), prox.cols());
  out.proxies.values() = std::move(g);

  auto over_params = [&](std::span<const double> ab) {
    return loss(LossInputs{inputs.batch, inputs.proxies, SimilarityParams{ab[0], ab[1]}});
  };
  const double ab[2] = {inputs.params.alpha, inputs.params.beta};
  g = central_difference(over_params, ab, epsilon);
  out.alpha = g[0];
  out.beta = g[1];
  return out;
}

namespace {

double group_error(std::span<const double> a, std::span<const double> n) {
  double diff = 0.0, scale = kGradcheckFloor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - n[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(n[i])});
  }
  return diff / scale;
}

}  // namespace

double GroupErrors::max() const { return std::max({embeddings, proxies, alpha, beta}); }

void GroupErrors::absorb(const GroupErrors& other) {
  embeddings = std::max(embeddings, other.embeddings);
  proxies = std::max(proxies, other.proxies);
  alpha = std::max(alpha, other.alpha);
  beta = std::max(beta, other.beta);
}

GroupErrors relative_errors(const LossOutput& analytic, const NumericGradient& numeric) {
  GroupErrors e;
  e.embeddings = group_error(analytic.grad_embeddings.values(), numeric.embeddings.values());
  e.proxies = group_error(analytic.grad_proxies.values(), numeric.proxies.values());
  const double ga = analytic.grad_alpha, gb = analytic.grad_beta;
  e.alpha = group_error(std::span<const double>(&ga, 1), std::span<const double>(&numeric.alpha, 1));
  e.beta = group_error(std::span<const double>(&gb, 1), std::span<const double>(&numeric.beta, 1));
  return e;
}

LossInputs random_loss_inputs(std::uint64_t seed, const GradcheckConfig& config) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> shots(2, 3);
  std::uniform_real_distribution<double> alpha(2.0, 12.0), beta(-0.2, 0.4);

  auto unit = [&](std::span<double> r) {
    for (double& v : r) v = gauss(rng);
    const Vec u = l2_normalize(r);
    std::copy(u.begin(), u.end(), r.begin());
  };

  std::vector<ClassId> labels;
  std::vector<std::size_t> queries;
  for (std::size_t k = 0; k < config.batch_classes; ++k) {
    const int m = shots(rng);
    std::uniform_int_distribution<int> pick(0, m - 1);
    queries.push_back(labels.size() + static_cast<std::size_t>(pick(rng)));
    for (int j = 0; j < m; ++j) labels.push_back(static_cast<ClassId>(k));
  }
  Matrix emb(labels.size(), config.dim);
  for (std::size_t i = 0; i < emb.rows(); ++i) unit(emb.row(i));

  Matrix prox(config.num_proxies, config.dim);
  std::vector<ClassId> ids(config.num_proxies);
  for (std::size_t k = 0; k < prox.rows(); ++k) {
    unit(prox.row(k));
    ids[k] = static_cast<ClassId>(k);
  }
  SimilarityParams params{alpha(rng), beta(rng)};
  return LossInputs{Minibatch(std::move(emb), std::move(labels), std::move(queries)),
                    ProxyTable(std::move(prox), std::move(ids)), params};
}

double triplet_kink_distance(const Matrix& instances, std::span<const ClassId> labels,
                             double margin) {
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < instances.rows(); ++a)
    for (std::size_t p = 0; p < instances.rows(); ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      const double d_ap = squared_distance(instances.row(a), instances.row(p));
      for (std::size_t q = 0; q < instances.rows(); ++q) {
        if (labels[q] == labels[a]) continue;
        const double d_an = squared_distance(instances.row(a), instances.row(q));
        closest = std::min(closest, std::abs(d_ap - d_an + margin));
      }
    }
  return closest;
}

namespace {

LossInputs smooth_loss_inputs(LossKind kind, std::uint64_t seed, const GradcheckConfig& config) {
  LossInputs in = random_loss_inputs(seed, config);
  if (kind != LossKind::kTriplet) return in;
  std::mt19937_64 reseed(seed);
  while (triplet_kink_distance(in.batch.instances(), in.batch.labels(),
                               config.hyper.triplet_margin) < config.kink_clearance)
    in = random_loss_inputs(reseed(), config);
  return in;
}

}  // namespace

GradcheckReport run_gradcheck(LossKind kind, std::uint64_t seed, std::size_t trials,
                              const GradcheckConfig& config) {
  GradcheckReport report;
  report.kind = kind;
  report.trials = trials;
  const LossFn value = [&](const LossInputs& in) {
    return evaluate_loss(kind, in.batch, in.proxies, in.params, config.hyper).value;
  };
  for (std::size_t t = 0; t < trials; ++t) {
    const LossInputs in = smooth_loss_inputs(kind, seed + t, config);
    const LossOutput analytic = evaluate_loss(kind, in.batch, in.proxies, in.params, config.hyper);
    const NumericGradient numeric = finite_difference_gradient(value, in, config.epsilon);
    report.worst.absorb(relative_errors(analytic, numeric));
  }
  report.passed = report.worst.max() < config.tolerance;
  return report;
}

}  // namespace proxyforge
