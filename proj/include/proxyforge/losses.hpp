#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "proxyforge/embedding.hpp"

namespace proxyforge {

enum class LossKind {
  kMaskedProxy,
  kMultinomialMaskedProxy,
  kProxyNca,
  kProxyAnchor,
  kTriplet,
  kPrototypical,
  kAngularPrototypical,
  kGe2e,
};

inline constexpr std::array<LossKind, 8> kAllLosses = {
    LossKind::kMaskedProxy,         LossKind::kMultinomialMaskedProxy,
    LossKind::kProxyNca,            LossKind::kProxyAnchor,
    LossKind::kTriplet,             LossKind::kPrototypical,
    LossKind::kAngularPrototypical, LossKind::kGe2e,
};

std::string_view loss_name(LossKind kind);
std::optional<LossKind> parse_loss_kind(std::string_view name);
bool uses_proxies(LossKind kind);

/// Balance factor of the best reported configuration.
inline constexpr double kDefaultLambda = 0.3;
/// Balance factor quoted alongside the loss definitions.
inline constexpr double kTextLambda = 0.5;

struct LossHyperparams {
  double lambda_balance = kDefaultLambda;
  double triplet_margin = 0.1;
  double anchor_margin = 0.15;  // delta
  double anchor_scale = 50.0;   // alpha of Proxy Anchor
  std::size_t shots_per_class = 2;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

struct LossOutput {
  double value = 0.0;
  Matrix grad_embeddings;  // batch size x D
  Matrix grad_proxies;     // P x D
  double grad_alpha = 0.0;
  double grad_beta = 0.0;

  // Positive query/centroid similarities s(x_i, c_{L_i}) and dL/ds for each,
  // in query order. Filled by the masked-proxy l1 terms only.
  std::vector<double> positive_similarity;
  std::vector<double> grad_positive_similarity;

  /// Number of s(.,.) / d(.,.) evaluations performed.
  std::size_t comparisons = 0;

  static LossOutput zeros(std::size_t instances, std::size_t dim, std::size_t proxies);

  /// this += weight * other, componentwise.
  LossOutput& add_scaled(const LossOutput& other, double weight);

  bool all_finite() const;
};

// ---- scalar building blocks ------------------------------------------------

/// log(sum exp(z)) with max subtraction. Requires non-empty z.
double log_sum_exp(std::span<const double> z);

/// log(1 + sum exp(z)) and its gradient exp(z_j) / (1 + sum exp(z)).
/// Empty z gives value 0.
struct SoftplusSum {
  double value = 0.0;
  std::vector<double> grad;
};
SoftplusSum log1p_sum_exp(std::span<const double> z);

/// -s_pos + log(sum exp(s_neg)): a softmax log-likelihood whose denominator
/// does not contain the positive term.
struct MaskedSoftmaxTerm {
  double value = 0.0;
  double grad_positive = -1.0;
  std::vector<double> grad_negatives;
};
MaskedSoftmaxTerm masked_softmax_term(double s_pos, std::span<const double> s_neg);

// ---- masked proxy family -----------------------------------------------------

/// Loss of a single reserved query against the in-batch centroids and the
/// proxies of classes absent from the batch. `query_index` is an instance
/// index that must be one of the batch's reserved queries.
double mp_query_loss(std::size_t query_index, const Minibatch& batch,
                     const ProxyTable& proxies, const SimilarityParams& params);

LossOutput mp_l1(const Minibatch& batch, const ProxyTable& proxies,
                 const SimilarityParams& params);

/// Pulls each in-batch proxy toward its class centroid and away from the
/// other in-batch centroids.
LossOutput mpr_regulator(const Minibatch& batch, const ProxyTable& proxies,
                         const SimilarityParams& params);

LossOutput mp_loss(const Minibatch& batch, const ProxyTable& proxies,
                   const SimilarityParams& params, const LossHyperparams& hyper);

LossOutput mmp_l1m(const Minibatch& batch, const ProxyTable& proxies,
                   const SimilarityParams& params);

LossOutput mmp_loss(const Minibatch& batch, const ProxyTable& proxies,
                    const SimilarityParams& params, const LossHyperparams& hyper);

// ---- baselines ---------------------------------------------------------------

LossOutput proxy_nca_loss(const Matrix& instances, std::span<const ClassId> labels,
                          const ProxyTable& proxies);

LossOutput proxy_anchor_loss(const Matrix& instances, std::span<const ClassId> labels,
                             const ProxyTable& proxies, const LossHyperparams& hyper);

/// Mean hinge over every valid (anchor, positive, negative) in the batch,
/// on squared Euclidean distances.
LossOutput triplet_loss(const Matrix& instances, std::span<const ClassId> labels,
                        const LossHyperparams& hyper);

LossOutput prototypical_loss(const Minibatch& batch);
LossOutput angular_prototypical_loss(const Minibatch& batch, const SimilarityParams& params);
LossOutput ge2e_loss(const Minibatch& batch, const SimilarityParams& params);

/// Dispatches to the loss named by `kind`. Gradient shapes always match the
/// batch and the proxy table, whether or not the loss reads them.
LossOutput evaluate_loss(LossKind kind, const Minibatch& batch, const ProxyTable& proxies,
                         const SimilarityParams& params, const LossHyperparams& hyper);

}  // namespace proxyforge
