#include "proxyforge/batching.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "proxyforge/errors.hpp"

namespace proxyforge {

void SamplerConfig::validate() const {
  if (expected_batch_size == 0) throw SamplerError("batch size must be positive");
  if (mode == SamplerMode::kBalanced) {
    if (shots_per_class < 2) throw SamplerError("balanced sampler needs M >= 2");
    if (expected_batch_size % shots_per_class != 0)
      throw SamplerError("batch size " + std::to_string(expected_batch_size) +
                         " is not divisible by M=" + std::to_string(shots_per_class));
  }
  if (classes_per_batch() == 0) throw SamplerError("batch size too small for one class");
}

std::size_t SamplerConfig::classes_per_batch() const {
  if (mode == SamplerMode::kBalanced)
    return shots_per_class ? expected_batch_size / shots_per_class : 0;
  // floor(B / 2.5) in integer arithmetic
  return (2 * expected_batch_size) / 5;
}

std::size_t SamplerConfig::min_instances_per_class() const {
  return mode == SamplerMode::kBalanced ? shots_per_class : 3;
}

ClassIndex::ClassIndex(std::span<const ClassId> labels) : num_instances_(labels.size()) {
  std::map<ClassId, std::vector<std::size_t>> grouped;
  for (std::size_t i = 0; i < labels.size(); ++i) grouped[labels[i]].push_back(i);
  for (auto& [c, ids] : grouped) {
    classes_.push_back(c);
    instances_.push_back(std::move(ids));
  }
}

Minibatch BatchDraw::materialize(Matrix member_embeddings) const {
  return Minibatch(std::move(member_embeddings), labels, query_positions);
}

BatchSampler::BatchSampler(const ClassIndex& index, SamplerConfig config)
    : index_(&index), config_(config), rng_(config.seed) {
  config_.validate();
  for (std::size_t k = 0; k < index.classes().size(); ++k)
    if (index.instances_of(k).size() >= config_.min_instances_per_class()) eligible_.push_back(k);
  if (eligible_.size() < config_.classes_per_batch())
    throw SamplerError("sampler needs " + std::to_string(config_.classes_per_batch()) +
                       " classes with >= " + std::to_string(config_.min_instances_per_class()) +
                       " instances, dataset has " + std::to_string(eligible_.size()));
}

std::size_t BatchSampler::shots_for_next_class(std::mt19937_64& rng) const {
  if (config_.mode == SamplerMode::kBalanced) return config_.shots_per_class;
  std::uniform_int_distribution<std::size_t> two_or_three(2, 3);
  return two_or_three(rng);
}

BatchDraw BatchSampler::draw_with(std::span<const std::size_t> class_positions,
                                  std::mt19937_64& rng) const {
  BatchDraw out;
  for (std::size_t k : class_positions) {
    const std::size_t m = shots_for_next_class(rng);
    const auto& pool = index_->instances_of(k);
    if (pool.size() < m)
      throw SamplerError("class " + std::to_string(index_->classes()[k]) + " has fewer than " +
                         std::to_string(m) + " instances");
    std::vector<std::size_t> picked;
    std::sample(pool.begin(), pool.end(), std::back_inserter(picked), m, rng);
    std::uniform_int_distribution<std::size_t> which(0, m - 1);
    out.query_positions.push_back(out.members.size() + which(rng));
    for (std::size_t i : picked) {
      out.members.push_back(i);
      out.labels.push_back(index_->classes()[k]);
    }
  }
  return out;
}

BatchDraw BatchSampler::draw() {
  std::vector<std::size_t> chosen;
  std::sample(eligible_.begin(), eligible_.end(), std::back_inserter(chosen),
              config_.classes_per_batch(), rng_);
  std::shuffle(chosen.begin(), chosen.end(), rng_);
  return draw_with(chosen, rng_);
}

BatchDraw BatchSampler::draw_classes(std::span<const std::size_t> class_positions) {
  return draw_with(class_positions, rng_);
}

std::vector<BatchDraw> BatchSampler::epoch(std::size_t epoch_index) {
  std::seed_seq seq{config_.seed, static_cast<std::uint64_t>(epoch_index), std::uint64_t{0x9e37}};
  std::mt19937_64 rng(seq);

  const std::size_t per_batch = config_.classes_per_batch();
  const std::size_t num_batches =
      std::max<std::size_t>(1, index_->num_instances() / config_.expected_batch_size);

  std::vector<std::size_t> queue;
  std::size_t head = 0;
  auto refill = [&] {
    queue.assign(eligible_.begin(), eligible_.end());
    std::shuffle(queue.begin(), queue.end(), rng);
    head = 0;
  };
  refill();

  std::vector<BatchDraw> batches;
  batches.reserve(num_batches);
  std::vector<std::size_t> chosen;
  std::vector<std::size_t> deferred;
  for (std::size_t b = 0; b < num_batches; ++b) {
    chosen.clear();
    while (chosen.size() < per_batch) {
      if (head == queue.size()) {
        refill();
        // Classes already in this batch go to the back of the fresh queue.
        std::stable_partition(queue.begin(), queue.end(), [&](std::size_t k) {
          return std::find(chosen.begin(), chosen.end(), k) == chosen.end();
        });
      }
      chosen.push_back(queue[head++]);
    }
    batches.push_back(draw_with(chosen, rng));
  }
  return batches;
}

BatchDraw sample_balanced(const ClassIndex& index, const SamplerConfig& config) {
  SamplerConfig c = config;
  c.mode = SamplerMode::kBalanced;
  return BatchSampler(index, c).draw();
}

BatchDraw sample_variable(const ClassIndex& index, const SamplerConfig& config) {
  SamplerConfig c = config;
  c.mode = SamplerMode::kVariable;
  return BatchSampler(index, c).draw();
}

std::vector<BatchDraw> epoch_iterator(const ClassIndex& index, const SamplerConfig& config,
                                      std::size_t epoch_index) {
  return BatchSampler(index, config).epoch(epoch_index);
}

}  // namespace proxyforge
