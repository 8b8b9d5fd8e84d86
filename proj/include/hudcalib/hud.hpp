#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hudcalib/types.hpp"

namespace hudcalib {

// Human answer distribution for one sample. Each distinct answer keeps the
// mean quantized confidence of the annotators who gave it; the probabilities
// are those means renormalized. The uncertainty score is the plain mean of
// the per-label means, deliberately not renormalized: unanimous confident
// samples land near 1, samples with many hesitant answers sink toward 0.
struct HumanDistribution {
  std::vector<std::string> labels;      // first-appearance order
  std::vector<double> mean_confidence;  // aligned with labels
  std::vector<double> probs;            // mean_confidence / sum
  double hud_score = 0.0;
};

HumanDistribution build_human_distribution(std::span<const Annotation> answers,
                                           const ConfidenceValues& values);

struct ScoredSample {
  EvalSample sample;
  HumanDistribution human;
};

std::vector<ScoredSample> score_samples(std::vector<EvalSample> samples,
                                        const ConfidenceValues& values);

// Samples where all annotators agree on one answer carry no disagreement
// signal, so the analysis works on the multi-label remainder.
struct FilterResult {
  std::vector<ScoredSample> retained;
  std::size_t removed_single_label = 0;
};

FilterResult filter_single_label(std::vector<ScoredSample> samples);

// Uncertainty level: low means high agreement (high score).
enum class Level { low, medium, high };

std::string_view to_string(Level level);

struct SplitAssignment {
  struct Row {
    std::int64_t question_id;
    double hud_score;
    Level level;
  };

  // Descending score, ties broken by ascending question_id.
  std::vector<Row> rows;
  std::array<std::size_t, 3> sizes{};  // indexed by Level
  std::unordered_map<std::int64_t, Level> by_id;

  Level level_of(std::int64_t question_id) const;
};

// Terciles by score rank: the top ceil(n/3) samples become the low
// uncertainty set, half of the remainder (rounded up) the medium one, the
// rest the high one. Fewer than 3 samples cannot be split.
SplitAssignment split_terciles(std::span<const ScoredSample> samples);

struct SetStats {
  std::string_view set;
  std::size_t count = 0;
  double mean_labels = 0.0;
  double mean_hud = 0.0;
  double std_hud = 0.0;  // population
  double min_hud = 0.0;
  double max_hud = 0.0;
};

struct HudStats {
  std::array<SetStats, 4> sets;         // All, Low, Medium, High
  std::vector<std::size_t> histogram;   // uniform bins over [0, 1], all samples
};

HudStats hud_statistics(std::span<const ScoredSample> samples,
                        const SplitAssignment& split,
                        std::size_t histogram_bins = 20);

}  // namespace hudcalib
