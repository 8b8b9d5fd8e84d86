#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hudcalib/metrics.hpp"
#include "hudcalib/types.hpp"

namespace hudcalib {

// Recipe for a synthetic corpus with a known answer distribution per sample.
// Each sample draws between labels_min and labels_max distinct answers
// (weighted by label_count_weights), gives each at least one annotator, and
// assigns every annotator a confidence drawn from confidence_weights. The
// emitted logits are alpha * ln(true probability) plus optional gaussian
// noise, so a temperature fit on a clean corpus should land on alpha.
struct SynthSpec {
  std::size_t sample_count = 100;
  std::size_t vocab_size = 50;
  std::size_t annotators = 10;
  std::size_t labels_min = 2;
  std::size_t labels_max = 4;
  std::vector<double> label_count_weights = {0.6, 0.3, 0.1};
  std::vector<double> confidence_weights = {0.7, 0.2, 0.1};  // yes, maybe, no
  double alpha = 1.0;
  double sigma = 0.0;
  std::uint64_t seed = 1;
};

struct TrueDistribution {
  std::int64_t question_id = 0;
  std::vector<std::string> labels;
  std::vector<double> probs;
  double hud_score = 0.0;
};

struct Corpus {
  std::vector<AnnotatedSample> annotations;
  PredictionSet predictions;
  Vocabulary vocabulary;
  std::vector<TrueDistribution> true_distributions;
};

// Deterministic in the recipe: every sample derives its own generator from
// (seed, question_id), so corpora reproduce byte for byte.
Corpus generate_corpus(const SynthSpec& spec);

// Writes annotations.json, predictions.jsonl, vocabulary.txt, and
// true_distributions.jsonl into dir, creating it if needed.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// Straight-line re-evaluation of a corpus for cross-checking the main
// pipeline: naive softmax without max subtraction, linear vocabulary scans,
// plain sequential sums. Shares only the data types with the fast path.
MetricsTable brute_force_evaluate(const Corpus& corpus, double temperature,
                                  const EvalOptions& opts = {});

}  // namespace hudcalib
