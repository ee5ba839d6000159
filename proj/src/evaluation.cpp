#include "proxyforge/evaluation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include "proxyforge/errors.hpp"

namespace proxyforge {

std::vector<std::size_t> segment_offsets(std::size_t frames, const SegmentConfig& config) {
  if (config.num_segments == 0 || config.segment_length == 0)
    throw std::invalid_argument("segment config needs positive count and length");
  if (frames < config.segment_length)
    throw TrialTooShortError(fmt::format("utterance of {} frames is shorter than segment length {}",
                                         frames, config.segment_length));
  const std::size_t span = frames - config.segment_length;
  std::vector<std::size_t> out(config.num_segments, 0);
  if (config.num_segments == 1) return out;
  for (std::size_t i = 0; i < config.num_segments; ++i)
    out[i] = (i * span) / (config.num_segments - 1);
  return out;
}

Matrix embed_segments(const Matrix& frames, const ToyEmbedder& embedder,
                      const SegmentConfig& config) {
  const auto offsets = segment_offsets(frames.rows(), config);
  Matrix out(offsets.size(), embedder.output_dim());
  for (std::size_t i = 0; i < offsets.size(); ++i)
    out.set_row(i, embedder.embed(pool_frames(frames, offsets[i], config.segment_length)));
  return out;
}

TrialScore score_segment_sets(const Matrix& segments_a, const Matrix& segments_b) {
  TrialScore out;
  double total = 0.0;
  for (std::size_t i = 0; i < segments_a.rows(); ++i)
    for (std::size_t j = 0; j < segments_b.rows(); ++j) {
      total += euclidean_distance(segments_a.row(i), segments_b.row(j));
      ++out.distance_evaluations;
    }
  out.score = -total / static_cast<double>(out.distance_evaluations);
  return out;
}

TrialScore score_trial(const Matrix& utterance_a, const Matrix& utterance_b,
                       const ToyEmbedder& embedder, const SegmentConfig& config) {
  return score_segment_sets(embed_segments(utterance_a, embedder, config),
                            embed_segments(utterance_b, embedder, config));
}

std::vector<Trial> build_trials(const Split& test, std::size_t num_trials, std::uint64_t seed) {
  std::vector<ClassId> classes = test.class_ids();
  if (classes.size() < 2) throw EvaluationError("trial list needs at least two test classes");
  std::vector<std::vector<std::size_t>> by_class(classes.size());
  for (std::size_t i = 0; i < test.utterances.size(); ++i) {
    const auto k = std::lower_bound(classes.begin(), classes.end(), test.utterances[i].label) -
                   classes.begin();
    by_class[static_cast<std::size_t>(k)].push_back(i);
  }
  std::vector<std::size_t> target_ready;
  for (std::size_t k = 0; k < classes.size(); ++k)
    if (by_class[k].size() >= 2) target_ready.push_back(k);
  if (target_ready.empty())
    throw EvaluationError("no test class has two utterances for a target trial");

  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  std::vector<Trial> trials;
  trials.reserve(num_trials);
  for (std::size_t t = 0; t < num_trials; ++t) {
    Trial trial;
    if (t % 2 == 0) {
      const auto& pool = by_class[target_ready[pick(target_ready.size())]];
      const std::size_t a = pick(pool.size());
      std::size_t b = pick(pool.size() - 1);
      if (b >= a) ++b;
      trial = {pool[a], pool[b], true};
    } else {
      const std::size_t ka = pick(classes.size());
      std::size_t kb = pick(classes.size() - 1);
      if (kb >= ka) ++kb;
      trial = {by_class[ka][pick(by_class[ka].size())], by_class[kb][pick(by_class[kb].size())],
               false};
    }
    trials.push_back(trial);
  }
  return trials;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<double> score_trials(const std::vector<Trial>& trials, const Split& split,
                                 const ToyEmbedder& embedder, const SegmentConfig& config,
                                 std::size_t workers) {
  std::vector<char> needed(split.utterances.size(), 0);
  for (const Trial& t : trials) {
    if (t.utterance_a >= needed.size() || t.utterance_b >= needed.size())
      throw EvaluationError("trial references an utterance outside the split");
    needed[t.utterance_a] = needed[t.utterance_b] = 1;
  }
  // Fail on short utterances before spawning workers.
  for (std::size_t i = 0; i < needed.size(); ++i)
    if (needed[i]) segment_offsets(split.utterances[i].frames.rows(), config);

  std::vector<Matrix> segments(split.utterances.size());
  parallel_for(segments.size(), workers, [&](std::size_t i) {
    if (needed[i]) segments[i] = embed_segments(split.utterances[i].frames, embedder, config);
  });
  std::vector<double> scores(trials.size());
  parallel_for(trials.size(), workers, [&](std::size_t i) {
    scores[i] =
        score_segment_sets(segments[trials[i].utterance_a], segments[trials[i].utterance_b]).score;
  });
  return scores;
}

ScoreSet split_scores(const std::vector<Trial>& trials, const std::vector<double>& scores) {
  if (trials.size() != scores.size()) throw EvaluationError("one score per trial required");
  ScoreSet out;
  for (std::size_t i = 0; i < trials.size(); ++i)
    (trials[i].is_target ? out.target_scores : out.nontarget_scores).push_back(scores[i]);
  return out;
}

std::vector<DetPoint> det_curve(const ScoreSet& scores) {
  if (scores.target_scores.empty() || scores.nontarget_scores.empty())
    throw EvaluationError("EER needs non-empty target and non-target score lists");
  std::vector<double> tgt = scores.target_scores;
  std::vector<double> non = scores.nontarget_scores;
  std::sort(tgt.begin(), tgt.end());
  std::sort(non.begin(), non.end());
  std::vector<double> thresholds(tgt);
  thresholds.insert(thresholds.end(), non.begin(), non.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double nt = static_cast<double>(tgt.size());
  const double nn = static_cast<double>(non.size());
  std::vector<DetPoint> points;
  points.reserve(thresholds.size() + 1);
  for (double t : thresholds) {
    const auto below_t = std::lower_bound(tgt.begin(), tgt.end(), t) - tgt.begin();
    const auto below_n = std::lower_bound(non.begin(), non.end(), t) - non.begin();
    points.push_back({t, (nn - static_cast<double>(below_n)) / nn,
                      static_cast<double>(below_t) / nt});
  }
  points.push_back({std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity()),
                    0.0, 1.0});
  return points;
}

EerResult compute_eer(const ScoreSet& scores) {
  const auto points = det_curve(scores);
  // FAR - FRR is non-increasing along the sweep; it starts at 1 - 0 and ends at 0 - 1.
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double diff = points[k].far - points[k].frr;
    if (diff > 0.0) continue;
    if (diff == 0.0 || k == 0) return {points[k].far, points[k].threshold};
    const DetPoint& a = points[k - 1];
    const DetPoint& b = points[k];
    const double da = a.far - a.frr;
    const double w = da / (da - diff);
    return {a.far + w * (b.far - a.far), a.threshold + w * (b.threshold - a.threshold)};
  }
  return {points.back().far, points.back().threshold};
}

std::string trial_scores_csv(const std::vector<Trial>& trials, const std::vector<double>& scores) {
  if (trials.size() != scores.size()) throw EvaluationError("one score per trial required");
  std::string out = "trial_id,is_target,score\n";
  for (std::size_t i = 0; i < trials.size(); ++i)
    out += fmt::format("{},{},{}\n", i, trials[i].is_target ? 1 : 0, scores[i]);
  return out;
}

std::string det_csv(const std::vector<DetPoint>& points) {
  std::string out = "threshold,far,frr\n";
  for (const auto& p : points) out += fmt::format("{},{},{}\n", p.threshold, p.far, p.frr);
  return out;
}

}  // namespace proxyforge
