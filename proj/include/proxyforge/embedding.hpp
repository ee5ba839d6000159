#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace proxyforge {

using ClassId = std::int64_t;
using Vec = std::vector<double>;

/// Dense row-major matrix. Rows are the unit of storage for embeddings,
/// proxies and embedder weights.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  void set_row(std::size_t r, std::span<const double> v);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> u, std::span<const double> v);
double l2_norm(std::span<const double> v);
double squared_distance(std::span<const double> u, std::span<const double> v);
double euclidean_distance(std::span<const double> u, std::span<const double> v);

/// v / ||v||. Throws NormalizationError for the zero vector or non-finite input.
Vec l2_normalize(std::span<const double> v);

/// Pulls a gradient taken w.r.t. unit = raw/||raw|| back onto raw:
/// (g - (g.unit) unit) / ||raw||, accumulated into `out`.
void accumulate_normalize_backward(std::span<const double> grad_unit,
                                   std::span<const double> unit, double raw_norm,
                                   std::span<double> out);

/// Lower bound enforced on the similarity scale after every optimizer step.
inline constexpr double kAlphaMin = 1e-3;

struct SimilarityParams {
  double alpha = 10.0;
  double beta = 0.1;
};

/// alpha * (u.v - beta)
double scaled_cosine(std::span<const double> u, std::span<const double> v,
                     const SimilarityParams& params);

/// One learnable direction per training class.
class ProxyTable {
 public:
  ProxyTable() = default;
  ProxyTable(Matrix proxies, std::vector<ClassId> class_ids);

  std::size_t size() const noexcept { return class_ids_.size(); }
  std::size_t dim() const noexcept { return proxies_.cols(); }

  const Matrix& proxies() const noexcept { return proxies_; }
  Matrix& proxies() noexcept { return proxies_; }
  const std::vector<ClassId>& class_ids() const noexcept { return class_ids_; }

  std::span<const double> proxy(std::size_t k) const { return proxies_.row(k); }

  std::optional<std::size_t> find(ClassId id) const;
  std::size_t index_of(ClassId id) const;

  /// Re-normalizes every row to unit length.
  void renormalize();

 private:
  Matrix proxies_;
  std::vector<ClassId> class_ids_;
  std::unordered_map<ClassId, std::size_t> index_;
};

/// Unit vectors drawn uniformly on the sphere (normalized Gaussians).
/// Class ids are 0..num_classes-1.
ProxyTable init_proxies(std::size_t num_classes, std::size_t dim, std::uint64_t seed);
ProxyTable init_proxies(const std::vector<ClassId>& class_ids, std::size_t dim,
                        std::uint64_t seed);

/// Instances with labels and one reserved query per class. The constructor
/// enforces the batch invariants: every class has at least two instances and
/// exactly one query.
class Minibatch {
 public:
  Minibatch(Matrix instances, std::vector<ClassId> labels,
            std::vector<std::size_t> query_indices);

  const Matrix& instances() const noexcept { return instances_; }
  const std::vector<ClassId>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return instances_.cols(); }

  /// Distinct classes, ordered like query_indices.
  const std::vector<ClassId>& classes() const noexcept { return classes_; }
  std::size_t num_classes() const noexcept { return classes_.size(); }
  const std::vector<std::size_t>& query_indices() const noexcept { return queries_; }

  /// Instances of class position k, query excluded.
  const std::vector<std::size_t>& support(std::size_t k) const { return support_[k]; }
  /// All instances of class position k, query included.
  const std::vector<std::size_t>& members(std::size_t k) const { return members_[k]; }

  std::optional<std::size_t> class_position(ClassId id) const;
  bool contains(ClassId id) const { return class_position(id).has_value(); }

  Minibatch with_instances(Matrix instances) const;

 private:
  Matrix instances_;
  std::vector<ClassId> labels_;
  std::vector<std::size_t> queries_;
  std::vector<ClassId> classes_;
  std::vector<std::vector<std::size_t>> support_;
  std::vector<std::vector<std::size_t>> members_;
};

/// Normalized mean of each class's non-query instances, together with the
/// pre-normalization norms needed for backpropagation.
struct CentroidSet {
  Matrix centroids;           // num_classes x D, unit rows
  std::vector<double> norms;  // ||mean|| per class

  /// Accumulates dL/d(instances) given dL/d(centroids).
  void backward(const Minibatch& batch, const Matrix& grad_centroids,
                Matrix& grad_instances) const;
};

CentroidSet leave_one_out_centroids(const Minibatch& batch);

}  // namespace proxyforge
