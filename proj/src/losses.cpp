#include "proxyforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "loss_detail.hpp"
#include "proxyforge/errors.hpp"

namespace proxyforge {

std::string_view loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::kMaskedProxy: return "mp";
    case LossKind::kMultinomialMaskedProxy: return "mmp";
    case LossKind::kProxyNca: return "proxy_nca";
    case LossKind::kProxyAnchor: return "proxy_anchor";
    case LossKind::kTriplet: return "triplet";
    case LossKind::kPrototypical: return "prototypical";
    case LossKind::kAngularPrototypical: return "angular_prototypical";
    case LossKind::kGe2e: return "ge2e";
  }
  return "unknown";
}

std::optional<LossKind> parse_loss_kind(std::string_view name) {
  for (LossKind k : kAllLosses)
    if (loss_name(k) == name) return k;
  return std::nullopt;
}

bool uses_proxies(LossKind kind) {
  return kind == LossKind::kMaskedProxy || kind == LossKind::kMultinomialMaskedProxy ||
         kind == LossKind::kProxyNca || kind == LossKind::kProxyAnchor;
}

void LossHyperparams::validate() const {
  if (!(lambda_balance >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(anchor_scale > 0.0)) throw std::invalid_argument("anchor scale must be > 0");
  if (!(triplet_margin >= 0.0)) throw std::invalid_argument("triplet margin must be >= 0");
  if (shots_per_class < 2) throw std::invalid_argument("shots per class must be >= 2");
}

LossOutput LossOutput::zeros(std::size_t instances, std::size_t dim, std::size_t proxies) {
  LossOutput out;
  out.grad_embeddings = Matrix(instances, dim);
  out.grad_proxies = Matrix(proxies, dim);
  return out;
}

LossOutput& LossOutput::add_scaled(const LossOutput& other, double weight) {
  if (other.grad_embeddings.rows() != grad_embeddings.rows() ||
      other.grad_proxies.rows() != grad_proxies.rows())
    throw std::invalid_argument("LossOutput::add_scaled: shape mismatch");
  value = value + weight * other.value;
  auto& ge = grad_embeddings.values();
  const auto& oe = other.grad_embeddings.values();
  for (std::size_t i = 0; i < ge.size(); ++i) ge[i] = ge[i] + weight * oe[i];
  auto& gp = grad_proxies.values();
  const auto& op = other.grad_proxies.values();
  for (std::size_t i = 0; i < gp.size(); ++i) gp[i] = gp[i] + weight * op[i];
  grad_alpha = grad_alpha + weight * other.grad_alpha;
  grad_beta = grad_beta + weight * other.grad_beta;
  comparisons += other.comparisons;
  return *this;
}

bool LossOutput::all_finite() const {
  auto finite = [](double x) { return std::isfinite(x); };
  return std::isfinite(value) && std::isfinite(grad_alpha) && std::isfinite(grad_beta) &&
         std::all_of(grad_embeddings.values().begin(), grad_embeddings.values().end(), finite) &&
         std::all_of(grad_proxies.values().begin(), grad_proxies.values().end(), finite);
}

// ---------------------------------------------------------------------------

double log_sum_exp(std::span<const double> z) {
  if (z.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double m = *std::max_element(z.begin(), z.end());
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

SoftplusSum log1p_sum_exp(std::span<const double> z) {
  SoftplusSum out;
  out.grad.assign(z.size(), 0.0);
  if (z.empty()) return out;
  // Treat the leading 1 as exp(0) and fold it into the max-shifted sum.
  const double m = std::max(0.0, *std::max_element(z.begin(), z.end()));
  double s = std::exp(-m);
  for (double v : z) s += std::exp(v - m);
  out.value = m + std::log(s);
  for (std::size_t j = 0; j < z.size(); ++j) out.grad[j] = std::exp(z[j] - m) / s;
  return out;
}

MaskedSoftmaxTerm masked_softmax_term(double s_pos, std::span<const double> s_neg) {
  if (s_neg.empty())
    throw EmptyDenominatorError("masked softmax term: no negative pairs in denominator");
  MaskedSoftmaxTerm out;
  const double lse = log_sum_exp(s_neg);
  out.value = -s_pos + lse;
  out.grad_positive = -1.0;
  out.grad_negatives.resize(s_neg.size());
  for (std::size_t j = 0; j < s_neg.size(); ++j)
    out.grad_negatives[j] = std::exp(s_neg[j] - lse);
  return out;
}

namespace detail {

double softmax_cross_entropy(std::span<const double> logits, std::size_t target,
                             std::span<double> grad) {
  const double lse = log_sum_exp(logits);
  for (std::size_t j = 0; j < logits.size(); ++j) grad[j] = std::exp(logits[j] - lse);
  grad[target] -= 1.0;
  return lse - logits[target];
}

void require_proxy_coverage(const Minibatch& batch, const ProxyTable& proxies) {
  if (proxies.dim() != batch.dim())
    throw std::invalid_argument("proxy dimension does not match embedding dimension");
  for (ClassId c : batch.classes())
    if (!proxies.find(c))
      throw std::invalid_argument("no proxy for in-batch class " + std::to_string(c));
}

}  // namespace detail

// ---- masked proxy family -----------------------------------------------------

namespace {

/// Proxy rows whose class is absent from the batch.
std::vector<std::size_t> unmasked_proxies(const Minibatch& batch, const ProxyTable& proxies) {
  std::vector<std::size_t> out;
  out.reserve(proxies.size());
  for (std::size_t k = 0; k < proxies.size(); ++k)
    if (!batch.contains(proxies.class_ids()[k])) out.push_back(k);
  return out;
}

// Similarities of one query against everything on the negative side of the
// masked proxy objective: the other centroids first, then unmasked proxies.
struct QueryPairs {
  double s_pos = 0.0;
  std::vector<double> s_centroids;  // other centroids, class order minus own
  std::vector<std::size_t> centroid_ids;
  std::vector<double> s_proxies;  // aligned with unmasked list
};

QueryPairs query_pairs(std::size_t k, const Minibatch& batch, const CentroidSet& cs,
                       const ProxyTable& proxies, std::span<const std::size_t> unmasked,
                       const SimilarityParams& params, std::size_t& comparisons) {
  QueryPairs qp;
  auto x = batch.instances().row(batch.query_indices()[k]);
  qp.s_pos = scaled_cosine(x, cs.centroids.row(k), params);
  ++comparisons;
  for (std::size_t j = 0; j < batch.num_classes(); ++j) {
    if (j == k) continue;
    qp.s_centroids.push_back(scaled_cosine(x, cs.centroids.row(j), params));
    qp.centroid_ids.push_back(j);
    ++comparisons;
  }
  for (std::size_t p : unmasked) {
    qp.s_proxies.push_back(scaled_cosine(x, proxies.proxy(p), params));
    ++comparisons;
  }
  return qp;
}

// Backpropagates per-pair weights of one query's pairs.
void query_backward(std::size_t k, const Minibatch& batch, const CentroidSet& cs,
                    const ProxyTable& proxies, std::span<const std::size_t> unmasked,
                    const SimilarityParams& params, const QueryPairs& qp, double g_pos,
                    std::span<const double> g_centroids, std::span<const double> g_proxies,
                    Matrix& grad_centroids, LossOutput& out) {
  const std::size_t qi = batch.query_indices()[k];
  auto x = batch.instances().row(qi);
  auto gx = out.grad_embeddings.row(qi);
  detail::backprop_scaled_cosine(g_pos, x, cs.centroids.row(k), params, gx,
                                 grad_centroids.row(k), out);
  for (std::size_t n = 0; n < qp.centroid_ids.size(); ++n) {
    const std::size_t j = qp.centroid_ids[n];
    detail::backprop_scaled_cosine(g_centroids[n], x, cs.centroids.row(j), params, gx,
                                   grad_centroids.row(j), out);
  }
  for (std::size_t n = 0; n < unmasked.size(); ++n) {
    const std::size_t p = unmasked[n];
    detail::backprop_scaled_cosine(g_proxies[n], x, proxies.proxy(p), params, gx,
                                   out.grad_proxies.row(p), out);
  }
}

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

double mp_query_loss(std::size_t query_index, const Minibatch& batch,
                     const ProxyTable& proxies, const SimilarityParams& params) {
  detail::require_proxy_coverage(batch, proxies);
  const auto& q = batch.query_indices();
  auto it = std::find(q.begin(), q.end(), query_index);
  if (it == q.end())
    throw std::invalid_argument("mp_query_loss: instance is not a reserved query");
  const auto k = static_cast<std::size_t>(it - q.begin());
  const CentroidSet cs = leave_one_out_centroids(batch);
  const auto unmasked = unmasked_proxies(batch, proxies);
  std::size_t unused = 0;
  const QueryPairs qp = query_pairs(k, batch, cs, proxies, unmasked, params, unused);
  return masked_softmax_term(qp.s_pos, concat(qp.s_centroids, qp.s_proxies)).value;
}

LossOutput mp_l1(const Minibatch& batch, const ProxyTable& proxies,
                 const SimilarityParams& params) {
  detail::require_proxy_coverage(batch, proxies);
  const CentroidSet cs = leave_one_out_centroids(batch);
  const auto unmasked = unmasked_proxies(batch, proxies);
  const std::size_t nq = batch.num_classes();
  const double inv_q = 1.0 / static_cast<double>(nq);

  LossOutput out = LossOutput::zeros(batch.size(), batch.dim(), proxies.size());
  Matrix grad_centroids(nq, batch.dim());
  double total = 0.0;
  for (std::size_t k = 0; k < nq; ++k) {
    const QueryPairs qp = query_pairs(k, batch, cs, proxies, unmasked, params, out.comparisons);
    const MaskedSoftmaxTerm term =
        masked_softmax_term(qp.s_pos, concat(qp.s_centroids, qp.s_proxies));
    total += term.value;

    const double g_pos = term.grad_positive * inv_q;
    std::vector<double> g_neg(term.grad_negatives);
    for (double& g : g_neg) g *= inv_q;
    const std::span<const double> all(g_neg);
    query_backward(k, batch, cs, proxies, unmasked, params, qp, g_pos,
                   all.first(qp.s_centroids.size()), all.subspan(qp.s_centroids.size()),
                   grad_centroids, out);
    out.positive_similarity.push_back(qp.s_pos);
    out.grad_positive_similarity.push_back(g_pos);
  }
  out.value = total * inv_q;
  cs.backward(batch, grad_centroids, out.grad_embeddings);
  return out;
}

LossOutput mpr_regulator(const Minibatch& batch, const ProxyTable& proxies,
                         const SimilarityParams& params) {
  detail::require_proxy_coverage(batch, proxies);
  const std::size_t nc = batch.num_classes();
  if (nc < 2)
    throw EmptyDenominatorError("mask proxy regulator: single-class batch has no other centroid");
  const CentroidSet cs = leave_one_out_centroids(batch);
  const double inv_c = 1.0 / static_cast<double>(nc);

  LossOutput out = LossOutput::zeros(batch.size(), batch.dim(), proxies.size());
  Matrix grad_centroids(nc, batch.dim());
  double total = 0.0;
  std::vector<double> s_neg;
  for (std::size_t k = 0; k < nc; ++k) {
    const std::size_t p = proxies.index_of(batch.classes()[k]);
    auto pk = proxies.proxy(p);
    const double s_pos = scaled_cosine(cs.centroids.row(k), pk, params);
    ++out.comparisons;
    s_neg.clear();
    for (std::size_t j = 0; j < nc; ++j) {
      if (j == k) continue;
      s_neg.push_back(scaled_cosine(cs.centroids.row(j), pk, params));
      ++out.comparisons;
    }
    const MaskedSoftmaxTerm term = masked_softmax_term(s_pos, s_neg);
    total += term.value;

    auto gp = out.grad_proxies.row(p);
    detail::backprop_scaled_cosine(term.grad_positive * inv_c, cs.centroids.row(k), pk, params,
                                   grad_centroids.row(k), gp, out);
    std::size_t n = 0;
    for (std::size_t j = 0; j < nc; ++j) {
      if (j == k) continue;
      detail::backprop_scaled_cosine(term.grad_negatives[n++] * inv_c, cs.centroids.row(j), pk,
                                     params, grad_centroids.row(j), gp, out);
    }
  }
  out.value = total * inv_c;
  cs.backward(batch, grad_centroids, out.grad_embeddings);
  return out;
}

LossOutput mp_loss(const Minibatch& batch, const ProxyTable& proxies,
                   const SimilarityParams& params, const LossHyperparams& hyper) {
  LossOutput out = mp_l1(batch, proxies, params);
  if (hyper.lambda_balance != 0.0)
    out.add_scaled(mpr_regulator(batch, proxies, params), hyper.lambda_balance);
  return out;
}

LossOutput mmp_l1m(const Minibatch& batch, const ProxyTable& proxies,
                   const SimilarityParams& params) {
  detail::require_proxy_coverage(batch, proxies);
  const CentroidSet cs = leave_one_out_centroids(batch);
  const auto unmasked = unmasked_proxies(batch, proxies);
  const std::size_t nq = batch.num_classes();
  const double inv_q = 1.0 / static_cast<double>(nq);

  LossOutput out = LossOutput::zeros(batch.size(), batch.dim(), proxies.size());
  Matrix grad_centroids(nq, batch.dim());

  std::vector<QueryPairs> pairs;
  pairs.reserve(nq);
  for (std::size_t k = 0; k < nq; ++k)
    pairs.push_back(query_pairs(k, batch, cs, proxies, unmasked, params, out.comparisons));

  // Positive pairs pooled under a single log.
  std::vector<double> neg_pos(nq);
  for (std::size_t k = 0; k < nq; ++k) neg_pos[k] = -pairs[k].s_pos;
  const SoftplusSum positive = log1p_sum_exp(neg_pos);

  double centroid_terms = 0.0;
  double proxy_terms = 0.0;
  for (std::size_t k = 0; k < nq; ++k) {
    const QueryPairs& qp = pairs[k];
    SoftplusSum c_term = log1p_sum_exp(qp.s_centroids);
    SoftplusSum p_term = log1p_sum_exp(qp.s_proxies);
    centroid_terms += c_term.value;
    proxy_terms += p_term.value;
    for (double& g : c_term.grad) g *= inv_q;
    for (double& g : p_term.grad) g *= inv_q;

    const double g_pos = -positive.grad[k];
    query_backward(k, batch, cs, proxies, unmasked, params, qp, g_pos, c_term.grad, p_term.grad,
                   grad_centroids, out);
    out.positive_similarity.push_back(qp.s_pos);
    out.grad_positive_similarity.push_back(g_pos);
  }
  out.value = positive.value + centroid_terms * inv_q + proxy_terms * inv_q;
  cs.backward(batch, grad_centroids, out.grad_embeddings);
  return out;
}

LossOutput mmp_loss(const Minibatch& batch, const ProxyTable& proxies,
                    const SimilarityParams& params, const LossHyperparams& hyper) {
  LossOutput out = mmp_l1m(batch, proxies, params);
  if (hyper.lambda_balance != 0.0)
    out.add_scaled(mpr_regulator(batch, proxies, params), hyper.lambda_balance);
  return out;
}

LossOutput evaluate_loss(LossKind kind, const Minibatch& batch, const ProxyTable& proxies,
                         const SimilarityParams& params, const LossHyperparams& hyper) {
  auto with_shape = [&](LossOutput out) {
    if (out.grad_proxies.rows() != proxies.size())
      out.grad_proxies = Matrix(proxies.size(), batch.dim());
    return out;
  };
  switch (kind) {
    case LossKind::kMaskedProxy: return mp_loss(batch, proxies, params, hyper);
    case LossKind::kMultinomialMaskedProxy: return mmp_loss(batch, proxies, params, hyper);
    case LossKind::kProxyNca: return proxy_nca_loss(batch.instances(), batch.labels(), proxies);
    case LossKind::kProxyAnchor:
      return proxy_anchor_loss(batch.instances(), batch.labels(), proxies, hyper);
    case LossKind::kTriplet:
      return with_shape(triplet_loss(batch.instances(), batch.labels(), hyper));
    case LossKind::kPrototypical: return with_shape(prototypical_loss(batch));
    case LossKind::kAngularPrototypical:
      return with_shape(angular_prototypical_loss(batch, params));
    case LossKind::kGe2e: return with_shape(ge2e_loss(batch, params));
  }
  throw std::invalid_argument("evaluate_loss: unknown loss kind");
}

}  // namespace proxyforge
