#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "proxyforge/embedding.hpp"

namespace testing {

using proxyforge::ClassId;
using proxyforge::Matrix;
using proxyforge::Vec;

inline Matrix rows(std::initializer_list<std::initializer_list<double>> data) {
  const std::size_t cols = data.begin()->size();
  Matrix m(data.size(), cols);
  std::size_t r = 0;
  for (const auto& row : data) {
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

inline Vec unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec v(dim);
  double s = 0.0;
  for (double& x : v) {
    x = n(rng);
    s += x * x;
  }
  for (double& x : v) x /= std::sqrt(s);
  return v;
}

inline Matrix random_units(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  Matrix m(n, dim);
  for (std::size_t r = 0; r < n; ++r) m.set_row(r, unit(rng, dim));
  return m;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Vec row_vec(const Matrix& m, std::size_t r) {
  auto s = m.row(r);
  return Vec(s.begin(), s.end());
}

/// Batch with `shots[k]` unit instances for class k (ids 0..), first instance
/// of each class reserved as query.
inline proxyforge::Minibatch random_batch(std::mt19937_64& rng, const std::vector<int>& shots,
                                          std::size_t dim, ClassId first_id = 0) {
  std::size_t n = 0;
  for (int s : shots) n += static_cast<std::size_t>(s);
  Matrix inst = random_units(rng, n, dim);
  std::vector<ClassId> labels;
  std::vector<std::size_t> queries;
  for (std::size_t k = 0; k < shots.size(); ++k) {
    queries.push_back(labels.size());
    for (int j = 0; j < shots[k]; ++j) labels.push_back(first_id + static_cast<ClassId>(k));
  }
  return proxyforge::Minibatch(std::move(inst), std::move(labels), std::move(queries));
}

}  // namespace testing
