#pragma once

#include <span>

#include "proxyforge/embedding.hpp"
#include "proxyforge/losses.hpp"

namespace proxyforge::detail {

/// Accumulates the contribution of dL/ds for s = alpha (u.v - beta).
inline void backprop_scaled_cosine(double ds, std::span<const double> u,
                                   std::span<const double> v,
                                   const SimilarityParams& params, std::span<double> grad_u,
                                   std::span<double> grad_v, LossOutput& out) {
  const double a = ds * params.alpha;
  for (std::size_t d = 0; d < u.size(); ++d) {
    grad_u[d] += a * v[d];
    grad_v[d] += a * u[d];
  }
  out.grad_alpha += ds * (dot(u, v) - params.beta);
  out.grad_beta -= ds * params.alpha;
}

/// Softmax cross-entropy -logit[target] + LSE(logits); returns the value and
/// writes dL/dlogit into `grad`.
double softmax_cross_entropy(std::span<const double> logits, std::size_t target,
                             std::span<double> grad);

void require_proxy_coverage(const Minibatch& batch, const ProxyTable& proxies);

}  // namespace proxyforge::detail
