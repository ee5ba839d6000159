#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "proxyforge/dataset.hpp"
#include "proxyforge/embedder.hpp"

namespace proxyforge {

struct SegmentConfig {
  std::size_t num_segments = 10;
  std::size_t segment_length = 20;
};

/// Start offsets evenly spaced from 0 to frames - segment_length.
/// Throws TrialTooShortError when the utterance is shorter than one segment.
std::vector<std::size_t> segment_offsets(std::size_t frames, const SegmentConfig& config);

/// One unit embedding per segment (rows).
Matrix embed_segments(const Matrix& frames, const ToyEmbedder& embedder,
                      const SegmentConfig& config);

struct TrialScore {
  double score = 0.0;  // negated mean pairwise Euclidean distance
  std::size_t distance_evaluations = 0;
};

TrialScore score_segment_sets(const Matrix& segments_a, const Matrix& segments_b);

TrialScore score_trial(const Matrix& utterance_a, const Matrix& utterance_b,
                       const ToyEmbedder& embedder, const SegmentConfig& config);

struct Trial {
  std::size_t utterance_a = 0;  // indices into the test split
  std::size_t utterance_b = 0;
  bool is_target = false;
};

/// Alternating target / non-target trials over the split's classes.
std::vector<Trial> build_trials(const Split& test, std::size_t num_trials, std::uint64_t seed);

/// Scores every trial. Segment embeddings are computed once per utterance;
/// work is split across `workers` threads and results are written by index.
std::vector<double> score_trials(const std::vector<Trial>& trials, const Split& split,
                                 const ToyEmbedder& embedder, const SegmentConfig& config,
                                 std::size_t workers = 1);

struct ScoreSet {
  std::vector<double> target_scores;
  std::vector<double> nontarget_scores;
};

ScoreSet split_scores(const std::vector<Trial>& trials, const std::vector<double>& scores);

struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;  // fraction of non-target scores >= threshold
  double frr = 0.0;  // fraction of target scores < threshold
};

/// Operating points at every distinct score, plus a final point above the
/// maximum score where everything is rejected.
std::vector<DetPoint> det_curve(const ScoreSet& scores);

struct EerResult {
  double eer = 0.0;  // in [0, 1]
  double threshold = 0.0;
};

/// Crossing of FAR and FRR on the operating-point polyline, linearly
/// interpolated between adjacent points. Throws EvaluationError if either
/// score list is empty.
EerResult compute_eer(const ScoreSet& scores);

/// `trial_id,is_target,score`
std::string trial_scores_csv(const std::vector<Trial>& trials, const std::vector<double>& scores);
/// `threshold,far,frr`
std::string det_csv(const std::vector<DetPoint>& points);

}  // namespace proxyforge
