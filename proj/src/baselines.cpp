// Baseline objectives in their originally published forms.

#include <cmath>
#include <stdexcept>
#include <string>

#include "loss_detail.hpp"
#include "proxyforge/errors.hpp"
#include "proxyforge/losses.hpp"

namespace proxyforge {

namespace {

void require_labels(const Matrix& instances, std::span<const ClassId> labels) {
  if (instances.rows() != labels.size())
    throw std::invalid_argument("one label per instance required");
  if (instances.rows() == 0) throw std::invalid_argument("empty batch");
}

}  // namespace

LossOutput proxy_nca_loss(const Matrix& instances, std::span<const ClassId> labels,
                          const ProxyTable& proxies) {
  require_labels(instances, labels);
  if (proxies.size() < 2)
    throw EmptyDenominatorError("proxy NCA: a single proxy leaves the denominator empty");
  if (proxies.dim() != instances.cols())
    throw std::invalid_argument("proxy NCA: dimension mismatch");

  const std::size_t n = instances.rows();
  const std::size_t np = proxies.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  LossOutput out = LossOutput::zeros(n, instances.cols(), np);

  std::vector<double> dist(np);
  std::vector<double> neg_logits;
  std::vector<std::size_t> neg_ids;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto x = instances.row(i);
    const std::size_t own = proxies.index_of(labels[i]);
    neg_logits.clear();
    neg_ids.clear();
    for (std::size_t k = 0; k < np; ++k) {
      dist[k] = euclidean_distance(x, proxies.proxy(k));
      ++out.comparisons;
      if (k != own) {
        neg_logits.push_back(-dist[k]);
        neg_ids.push_back(k);
      }
    }
    // -log(e^{-d_own} / sum_{k != own} e^{-d_k}) = d_own + LSE(-d_k)
    const MaskedSoftmaxTerm term = masked_softmax_term(-dist[own], neg_logits);
    total += term.value;

    // dL/dd_own = +1, dL/dd_k = -softmax_k; d(d)/dx = (x - p)/d.
    auto gx = out.grad_embeddings.row(i);
    auto push = [&](std::size_t k, double g_dist) {
      if (dist[k] == 0.0) return;  // subgradient at the cusp
      auto p = proxies.proxy(k);
      auto gp = out.grad_proxies.row(k);
      const double c = g_dist * inv_n / dist[k];
      for (std::size_t d = 0; d < x.size(); ++d) {
        const double diff = c * (x[d] - p[d]);
        gx[d] += diff;
        gp[d] -= diff;
      }
    };
    push(own, 1.0);
    for (std::size_t m = 0; m < neg_ids.size(); ++m) push(neg_ids[m], -term.grad_negatives[m]);
  }
  out.value = total * inv_n;
  return out;
}

LossOutput proxy_anchor_loss(const Matrix& instances, std::span<const ClassId> labels,
                             const ProxyTable& proxies, const LossHyperparams& hyper) {
  require_labels(instances, labels);
  if (proxies.size() == 0) throw std::invalid_argument("proxy anchor: empty proxy table");
  if (proxies.dim() != instances.cols())
    throw std::invalid_argument("proxy anchor: dimension mismatch");
  for (ClassId c : labels)
    if (!proxies.find(c))
      throw std::invalid_argument("proxy anchor: no proxy for class " + std::to_string(c));

  const std::size_t n = instances.rows();
  const std::size_t np = proxies.size();
  const double scale = hyper.anchor_scale;
  const double margin = hyper.anchor_margin;
  LossOutput out = LossOutput::zeros(n, instances.cols(), np);

  // Cosine similarity of every (instance, proxy) pair, evaluated once.
  Matrix cos(np, n);
  for (std::size_t k = 0; k < np; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      cos(k, i) = dot(instances.row(i), proxies.proxy(k));
      ++out.comparisons;
    }

  std::size_t num_positive_proxies = 0;
  for (std::size_t k = 0; k < np; ++k) {
    const ClassId ck = proxies.class_ids()[k];
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] == ck) {
        ++num_positive_proxies;
        break;
      }
  }
  const double inv_pos = num_positive_proxies ? 1.0 / static_cast<double>(num_positive_proxies) : 0.0;
  const double inv_all = 1.0 / static_cast<double>(np);

  double pos_total = 0.0;
  double neg_total = 0.0;
  std::vector<double> z_pos, z_neg;
  std::vector<std::size_t> ids_pos, ids_neg;
  for (std::size_t k = 0; k < np; ++k) {
    const ClassId ck = proxies.class_ids()[k];
    z_pos.clear(); z_neg.clear(); ids_pos.clear(); ids_neg.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] == ck) {
        z_pos.push_back(-scale * (cos(k, i) - margin));
        ids_pos.push_back(i);
      } else {
        z_neg.push_back(scale * (cos(k, i) + margin));
        ids_neg.push_back(i);
      }
    }
    const SoftplusSum pos = log1p_sum_exp(z_pos);
    const SoftplusSum neg = log1p_sum_exp(z_neg);
    pos_total += pos.value;
    neg_total += neg.value;

    auto p = proxies.proxy(k);
    auto gp = out.grad_proxies.row(k);
    auto push = [&](std::size_t i, double g_cos) {
      auto x = instances.row(i);
      auto gx = out.grad_embeddings.row(i);
      for (std::size_t d = 0; d < x.size(); ++d) {
        gx[d] += g_cos * p[d];
        gp[d] += g_cos * x[d];
      }
    };
    for (std::size_t m = 0; m < ids_pos.size(); ++m)
      push(ids_pos[m], -scale * pos.grad[m] * inv_pos);
    for (std::size_t m = 0; m < ids_neg.size(); ++m)
      push(ids_neg[m], scale * neg.grad[m] * inv_all);
  }
  out.value = pos_total * inv_pos + neg_total * inv_all;
  return out;
}

LossOutput triplet_loss(const Matrix& instances, std::span<const ClassId> labels,
                        const LossHyperparams& hyper) {
  require_labels(instances, labels);
  const std::size_t n = instances.rows();
  const std::size_t dim = instances.cols();
  LossOutput out = LossOutput::zeros(n, dim, 0);

  std::size_t num_triplets = 0;
  double total = 0.0;
  Matrix grad(n, dim);
  for (std::size_t a = 0; a < n; ++a) {
    auto xa = instances.row(a);
    for (std::size_t p = 0; p < n; ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      auto xp = instances.row(p);
      for (std::size_t q = 0; q < n; ++q) {
        if (labels[q] == labels[a]) continue;
        auto xn = instances.row(q);
        const double d_ap = squared_distance(xa, xp);
        const double d_an = squared_distance(xa, xn);
        out.comparisons += 2;
        ++num_triplets;
        const double hinge = d_ap - d_an + hyper.triplet_margin;
        if (hinge <= 0.0) continue;
        total += hinge;
        // d/dxa = 2(xa-xp) - 2(xa-xn) = 2(xn-xp)
        auto ga = grad.row(a);
        auto gp = grad.row(p);
        auto gn = grad.row(q);
        for (std::size_t d = 0; d < dim; ++d) {
          ga[d] += 2.0 * (xn[d] - xp[d]);
          gp[d] -= 2.0 * (xa[d] - xp[d]);
          gn[d] += 2.0 * (xa[d] - xn[d]);
        }
      }
    }
  }
  if (num_triplets == 0) throw NoTripletError("triplet loss: batch contains no valid triplet");
  const double inv_t = 1.0 / static_cast<double>(num_triplets);
  out.value = total * inv_t;
  for (std::size_t i = 0; i < grad.values().size(); ++i)
    out.grad_embeddings.values()[i] = grad.values()[i] * inv_t;
  return out;
}

namespace {

// Shared by the two prototypical variants: cross-entropy of each reserved
// query over all leave-one-out centroids, under a pluggable logit.
template <typename Logit, typename LogitBackward>
LossOutput query_centroid_softmax(const Minibatch& batch, Logit logit, LogitBackward backward) {
  const std::size_t nc = batch.num_classes();
  if (nc < 2) throw EmptyDenominatorError("prototypical loss: single-class batch");
  const CentroidSet cs = leave_one_out_centroids(batch);
  const double inv_q = 1.0 / static_cast<double>(nc);

  LossOutput out = LossOutput::zeros(batch.size(), batch.dim(), 0);
  Matrix grad_centroids(nc, batch.dim());
  std::vector<double> logits(nc), g(nc);
  double total = 0.0;
  for (std::size_t k = 0; k < nc; ++k) {
    const std::size_t qi = batch.query_indices()[k];
    auto x = batch.instances().row(qi);
    for (std::size_t j = 0; j < nc; ++j) {
      logits[j] = logit(x, cs.centroids.row(j));
      ++out.comparisons;
    }
    total += detail::softmax_cross_entropy(logits, k, g);
    for (std::size_t j = 0; j < nc; ++j)
      backward(g[j] * inv_q, x, cs.centroids.row(j), out.grad_embeddings.row(qi),
               grad_centroids.row(j), out);
  }
  out.value = total * inv_q;
  cs.backward(batch, grad_centroids, out.grad_embeddings);
  return out;
}

}  // namespace

LossOutput prototypical_loss(const Minibatch& batch) {
  auto logit = [](std::span<const double> x, std::span<const double> c) {
    return -squared_distance(x, c);
  };
  auto backward = [](double g, std::span<const double> x, std::span<const double> c,
                     std::span<double> gx, std::span<double> gc, LossOutput&) {
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double t = 2.0 * g * (x[d] - c[d]);
      gx[d] -= t;
      gc[d] += t;
    }
  };
  return query_centroid_softmax(batch, logit, backward);
}

LossOutput angular_prototypical_loss(const Minibatch& batch, const SimilarityParams& params) {
  auto logit = [&](std::span<const double> x, std::span<const double> c) {
    return scaled_cosine(x, c, params);
  };
  auto backward = [&](double g, std::span<const double> x, std::span<const double> c,
                      std::span<double> gx, std::span<double> gc, LossOutput& out) {
    detail::backprop_scaled_cosine(g, x, c, params, gx, gc, out);
  };
  return query_centroid_softmax(batch, logit, backward);
}

LossOutput ge2e_loss(const Minibatch& batch, const SimilarityParams& params) {
  const std::size_t nc = batch.num_classes();
  if (nc < 2) throw EmptyDenominatorError("GE2E: single-class batch");
  const std::size_t n = batch.size();
  const std::size_t dim = batch.dim();
  const Matrix& x = batch.instances();
  LossOutput out = LossOutput::zeros(n, dim, 0);

  // Full-class centroids.
  Matrix full(nc, dim);
  std::vector<double> full_norm(nc);
  for (std::size_t k = 0; k < nc; ++k) {
    auto c = full.row(k);
    for (std::size_t i : batch.members(k))
      for (std::size_t d = 0; d < dim; ++d) c[d] += x(i, d);
    full_norm[k] = l2_norm(c);
    if (!(full_norm[k] > 0.0)) throw NormalizationError("GE2E: class centroid has zero norm");
    for (double& v : c) v /= full_norm[k];
  }
  Matrix grad_full(nc, dim);

  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> logits(nc), g(nc), own(dim), grad_own(dim), grad_raw(dim);
  double total = 0.0;
  for (std::size_t k = 0; k < nc; ++k) {
    const auto& members = batch.members(k);
    const double inv_m = 1.0 / static_cast<double>(members.size() - 1);
    for (std::size_t i : members) {
      // Own centroid without utterance i.
      std::fill(own.begin(), own.end(), 0.0);
      for (std::size_t j : members)
        if (j != i)
          for (std::size_t d = 0; d < dim; ++d) own[d] += x(j, d) * inv_m;
      const double own_norm = l2_norm(own);
      if (!(own_norm > 0.0)) throw NormalizationError("GE2E: leave-self-out centroid is zero");
      for (double& v : own) v /= own_norm;

      auto xi = x.row(i);
      for (std::size_t j = 0; j < nc; ++j) {
        logits[j] = scaled_cosine(xi, j == k ? std::span<const double>(own) : full.row(j), params);
        ++out.comparisons;
      }
      total += detail::softmax_cross_entropy(logits, k, g);

      auto gx = out.grad_embeddings.row(i);
      std::fill(grad_own.begin(), grad_own.end(), 0.0);
      for (std::size_t j = 0; j < nc; ++j) {
        if (j == k)
          detail::backprop_scaled_cosine(g[j] * inv_n, xi, own, params, gx, grad_own, out);
        else
          detail::backprop_scaled_cosine(g[j] * inv_n, xi, full.row(j), params, gx,
                                         grad_full.row(j), out);
      }
      std::fill(grad_raw.begin(), grad_raw.end(), 0.0);
      accumulate_normalize_backward(grad_own, own, own_norm, grad_raw);
      for (std::size_t j : members)
        if (j != i)
          for (std::size_t d = 0; d < dim; ++d) out.grad_embeddings(j, d) += grad_raw[d] * inv_m;
    }
  }
  // Full centroids were built from unscaled sums; the normalization absorbs
  // the 1/M factor, so backpropagate against the sum norm.
  for (std::size_t k = 0; k < nc; ++k) {
    std::fill(grad_raw.begin(), grad_raw.end(), 0.0);
    accumulate_normalize_backward(grad_full.row(k), full.row(k), full_norm[k], grad_raw);
    for (std::size_t i : batch.members(k))
      for (std::size_t d = 0; d < dim; ++d) out.grad_embeddings(i, d) += grad_raw[d];
  }
  out.value = total * inv_n;
  return out;
}

}  // namespace proxyforge
