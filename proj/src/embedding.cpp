#include "proxyforge/embedding.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "proxyforge/errors.hpp"

namespace proxyforge {

void Matrix::set_row(std::size_t r, std::span<const double> v) {
  if (v.size() != cols_) throw std::invalid_argument("Matrix::set_row: width mismatch");
  std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
}

double dot(std::span<const double> u, std::span<const double> v) {
  assert(u.size() == v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double squared_distance(std::span<const double> u, std::span<const double> v) {
  assert(u.size() == v.size());
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return s;
}

double euclidean_distance(std::span<const double> u, std::span<const double> v) {
  return std::sqrt(squared_distance(u, v));
}

Vec l2_normalize(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n > 0.0) || !std::isfinite(n))
    throw NormalizationError("l2_normalize: vector has zero or non-finite norm");
  Vec out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

void accumulate_normalize_backward(std::span<const double> grad_unit,
                                   std::span<const double> unit, double raw_norm,
                                   std::span<double> out) {
  const double proj = dot(grad_unit, unit);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += (grad_unit[i] - proj * unit[i]) / raw_norm;
}

double scaled_cosine(std::span<const double> u, std::span<const double> v,
                     const SimilarityParams& params) {
  return params.alpha * (dot(u, v) - params.beta);
}

// ---------------------------------------------------------------------------

ProxyTable::ProxyTable(Matrix proxies, std::vector<ClassId> class_ids)
    : proxies_(std::move(proxies)), class_ids_(std::move(class_ids)) {
  if (proxies_.rows() != class_ids_.size())
    throw std::invalid_argument("ProxyTable: one class id per proxy row required");
  for (std::size_t k = 0; k < class_ids_.size(); ++k) {
    if (!index_.emplace(class_ids_[k], k).second)
      throw std::invalid_argument("ProxyTable: duplicate class id " +
                                  std::to_string(class_ids_[k]));
  }
}

std::optional<std::size_t> ProxyTable::find(ClassId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ProxyTable::index_of(ClassId id) const {
  auto k = find(id);
  if (!k) throw std::out_of_range("ProxyTable: no proxy for class " + std::to_string(id));
  return *k;
}

void ProxyTable::renormalize() {
  for (std::size_t k = 0; k < size(); ++k) {
    auto r = proxies_.row(k);
    const Vec unit = l2_normalize(r);
    std::copy(unit.begin(), unit.end(), r.begin());
  }
}

ProxyTable init_proxies(const std::vector<ClassId>& class_ids, std::size_t dim,
                        std::uint64_t seed) {
  if (class_ids.empty()) throw std::invalid_argument("init_proxies: need at least one class");
  if (dim < 2) throw std::invalid_argument("init_proxies: dim must be >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(class_ids.size(), dim);
  for (std::size_t k = 0; k < m.rows(); ++k) {
    auto r = m.row(k);
    double n = 0.0;
    // A Gaussian draw of exact zero norm has probability zero; redraw anyway.
    while (n == 0.0) {
      for (double& x : r) x = gauss(rng);
      n = l2_norm(r);
    }
    for (double& x : r) x /= n;
  }
  return ProxyTable(std::move(m), class_ids);
}

ProxyTable init_proxies(std::size_t num_classes, std::size_t dim, std::uint64_t seed) {
  std::vector<ClassId> ids(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) ids[k] = static_cast<ClassId>(k);
  return init_proxies(ids, dim, seed);
}

// ---------------------------------------------------------------------------

Minibatch::Minibatch(Matrix instances, std::vector<ClassId> labels,
                     std::vector<std::size_t> query_indices)
    : instances_(std::move(instances)),
      labels_(std::move(labels)),
      queries_(std::move(query_indices)) {
  if (instances_.rows() != labels_.size())
    throw std::invalid_argument("Minibatch: one label per instance required");
  if (instances_.cols() < 2) throw std::invalid_argument("Minibatch: dimension must be >= 2");

  classes_.reserve(queries_.size());
  for (std::size_t q : queries_) {
    if (q >= labels_.size()) throw std::invalid_argument("Minibatch: query index out of range");
    const ClassId c = labels_[q];
    if (std::find(classes_.begin(), classes_.end(), c) != classes_.end())
      throw std::invalid_argument("Minibatch: two queries reserved for class " +
                                  std::to_string(c));
    classes_.push_back(c);
  }

  members_.assign(classes_.size(), {});
  support_.assign(classes_.size(), {});
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    auto k = class_position(labels_[i]);
    if (!k)
      throw std::invalid_argument("Minibatch: class " + std::to_string(labels_[i]) +
                                  " has no reserved query");
    members_[*k].push_back(i);
    if (i != queries_[*k]) support_[*k].push_back(i);
  }
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    if (members_[k].size() < 2)
      throw DegenerateClassError("Minibatch: class " + std::to_string(classes_[k]) +
                                 " has a single instance");
  }
}

std::optional<std::size_t> Minibatch::class_position(ClassId id) const {
  auto it = std::find(classes_.begin(), classes_.end(), id);
  if (it == classes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes_.begin());
}

Minibatch Minibatch::with_instances(Matrix instances) const {
  if (instances.rows() != instances_.rows())
    throw std::invalid_argument("Minibatch::with_instances: row count mismatch");
  Minibatch copy = *this;
  copy.instances_ = std::move(instances);
  return copy;
}

// ---------------------------------------------------------------------------

CentroidSet leave_one_out_centroids(const Minibatch& batch) {
  CentroidSet out{Matrix(batch.num_classes(), batch.dim()),
                  std::vector<double>(batch.num_classes())};
  Vec mean(batch.dim());
  for (std::size_t k = 0; k < batch.num_classes(); ++k) {
    const auto& support = batch.support(k);
    if (support.empty())
      throw DegenerateClassError("leave_one_out_centroids: class without support instances");
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t j : support) {
      auto x = batch.instances().row(j);
      for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += x[d];
    }
    for (double& v : mean) v /= static_cast<double>(support.size());
    const double n = l2_norm(mean);
    if (!(n > 0.0))
      throw NormalizationError("leave_one_out_centroids: support instances cancel out");
    out.norms[k] = n;
    auto c = out.centroids.row(k);
    for (std::size_t d = 0; d < mean.size(); ++d) c[d] = mean[d] / n;
  }
  return out;
}

void CentroidSet::backward(const Minibatch& batch, const Matrix& grad_centroids,
                           Matrix& grad_instances) const {
  Vec grad_mean(batch.dim());
  for (std::size_t k = 0; k < batch.num_classes(); ++k) {
    std::fill(grad_mean.begin(), grad_mean.end(), 0.0);
    accumulate_normalize_backward(grad_centroids.row(k), centroids.row(k), norms[k],
                                  grad_mean);
    const auto& support = batch.support(k);
    const double inv = 1.0 / static_cast<double>(support.size());
    for (std::size_t j : support) {
      auto g = grad_instances.row(j);
      for (std::size_t d = 0; d < g.size(); ++d) g[d] += grad_mean[d] * inv;
    }
  }
}

}  // namespace proxyforge
