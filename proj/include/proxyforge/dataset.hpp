#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "proxyforge/embedding.hpp"

namespace proxyforge {

/// Knobs of the class-conditional Gaussian generator. Each class has a random
/// unit mean direction; an utterance centre is mean + N(0, spread^2 I) and
/// each of its frames adds another N(0, (spread * frame_noise_ratio)^2 I).
/// With class_subspace_dim > 0 the mean directions are drawn inside a fixed
/// random subspace of that rank, shared by train and test classes, while the
/// noise stays isotropic over the full feature space.
struct DatasetConfig {
  std::size_t train_classes = 50;
  std::size_t test_classes = 10;
  std::size_t train_instances_per_class = 16;
  std::size_t test_instances_per_class = 16;
  std::size_t feature_dim = 64;
  std::size_t class_subspace_dim = 16;  // 0: full feature space
  std::size_t min_frames = 40;
  std::size_t max_frames = 80;
  double spread = 0.1;
  double frame_noise_ratio = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Utterance {
  ClassId label = 0;
  Matrix frames;  // num_frames x feature_dim
};

struct Split {
  std::vector<Utterance> utterances;

  std::vector<ClassId> labels() const;
  /// Distinct labels in ascending order.
  std::vector<ClassId> class_ids() const;
};

/// Train and test splits with disjoint class sets.
struct SyntheticCorpus {
  Split train;
  Split test;
  Matrix class_means;  // (train + test classes) x feature_dim, row = class id
};

SyntheticCorpus generate_dataset(const DatasetConfig& config);

/// Throws std::logic_error if any class appears in both splits.
void require_disjoint(const Split& train, const Split& test);

/// Mean of frames [offset, offset + length).
Vec pool_frames(const Matrix& frames, std::size_t offset, std::size_t length);

}  // namespace proxyforge
