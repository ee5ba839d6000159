#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "proxyforge/embedding.hpp"

namespace proxyforge {

enum class SamplerMode { kBalanced, kVariable };

struct SamplerConfig {
  SamplerMode mode = SamplerMode::kBalanced;
  std::size_t shots_per_class = 2;       // M, balanced mode
  std::size_t expected_batch_size = 24;  // B
  std::uint64_t seed = 0;

  /// Throws SamplerError when the configuration is malformed.
  void validate() const;

  /// B / M in balanced mode, floor(B / 2.5) in variable mode.
  std::size_t classes_per_batch() const;

  /// Smallest per-class instance count a class needs to be drawable.
  std::size_t min_instances_per_class() const;
};

/// Instance ids of a labelled collection, grouped by class.
class ClassIndex {
 public:
  explicit ClassIndex(std::span<const ClassId> labels);

  std::size_t num_instances() const noexcept { return num_instances_; }
  const std::vector<ClassId>& classes() const noexcept { return classes_; }
  const std::vector<std::size_t>& instances_of(std::size_t class_pos) const {
    return instances_[class_pos];
  }

 private:
  std::size_t num_instances_ = 0;
  std::vector<ClassId> classes_;
  std::vector<std::vector<std::size_t>> instances_;
};

/// Which collection instances form a batch, with their labels and the
/// position (into `members`) of each class's reserved query.
struct BatchDraw {
  std::vector<std::size_t> members;
  std::vector<ClassId> labels;
  std::vector<std::size_t> query_positions;

  std::size_t num_classes() const { return query_positions.size(); }

  /// Builds a Minibatch from per-member embedding rows.
  Minibatch materialize(Matrix member_embeddings) const;
};

/// Deterministic sequential batch generator.
class BatchSampler {
 public:
  BatchSampler(const ClassIndex& index, SamplerConfig config);

  /// A batch over a uniformly random subset of eligible classes.
  BatchDraw draw();

  /// A batch over the given class positions (into ClassIndex::classes()).
  BatchDraw draw_classes(std::span<const std::size_t> class_positions);

  /// Batches of one epoch. Classes are consumed from a shuffled queue without
  /// replacement and the queue is refilled when exhausted; the epoch holds
  /// max(1, num_instances / B) batches.
  std::vector<BatchDraw> epoch(std::size_t epoch_index);

  const std::vector<std::size_t>& eligible_classes() const noexcept { return eligible_; }

 private:
  std::size_t shots_for_next_class(std::mt19937_64& rng) const;
  BatchDraw draw_with(std::span<const std::size_t> class_positions, std::mt19937_64& rng) const;

  const ClassIndex* index_;
  SamplerConfig config_;
  std::vector<std::size_t> eligible_;
  std::mt19937_64 rng_;
};

BatchDraw sample_balanced(const ClassIndex& index, const SamplerConfig& config);
BatchDraw sample_variable(const ClassIndex& index, const SamplerConfig& config);
std::vector<BatchDraw> epoch_iterator(const ClassIndex& index, const SamplerConfig& config,
                                      std::size_t epoch_index);

}  // namespace proxyforge
