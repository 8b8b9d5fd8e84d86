#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "hudcalib/hud.hpp"
#include "hudcalib/types.hpp"

namespace hudcalib {

double entropy(std::span<const double> p);
double tvd(std::span<const double> p, std::span<const double> q);

// KL(p || q) in nats. Zero p entries contribute nothing; a zero q entry
// under positive p is rejected, the caller is expected to floor first.
double kl(std::span<const double> p, std::span<const double> q);

// Accuracy credited to one predicted answer: a third of the annotators who
// gave exactly that answer, capped at 1.
double vqa_accuracy(std::span<const Annotation> answers,
                    std::string_view predicted);

struct ConfAcc {
  double confidence;
  double accuracy;
};

// Expected calibration error over equal-width confidence bins.
double ece(std::span<const ConfAcc> points, std::size_t bins = 10);

// Human and model probabilities reduced to a shared support: the human
// labels, plus one synthetic "<residual>" slot for the model's off-support
// mass when requested. Model mass for labels missing from the vocabulary is
// zero before flooring; both vectors are floored and renormalized so that
// divergences stay finite. `model_probs` spans the full vocabulary.
struct AlignedPair {
  std::vector<std::string> support;
  std::vector<double> human;
  std::vector<double> model;
  std::vector<std::string> unmatched;  // support labels absent from the vocabulary
};

AlignedPair align_support(const HumanDistribution& human,
                          std::span<const double> model_probs,
                          const Vocabulary& vocab, double floor = 1e-8,
                          bool residual_bin = false);

enum class SetId { all, low, medium, high };

std::string_view to_string(SetId set);

struct MetricsRow {
  double vqa_acc = 0.0;
  double tvd = 0.0;
  double kl = 0.0;
  double entce = 0.0;
  double ece = 0.0;
  std::size_t sample_count = 0;
};

struct MetricsTable {
  std::array<MetricsRow, 4> rows{};  // All, Low, Medium, High

  MetricsRow& row(SetId s) { return rows[static_cast<std::size_t>(s)]; }
  const MetricsRow& row(SetId s) const {
    return rows[static_cast<std::size_t>(s)];
  }
};

struct PerSampleMetrics {
  std::int64_t question_id = 0;
  Level level = Level::low;
  double hud_score = 0.0;
  std::vector<std::string> support;
  std::vector<double> human;
  std::vector<double> model;
  std::vector<std::string> unmatched;
  double tvd = 0.0;
  double kl = 0.0;
  double entce_signed = 0.0;  // model entropy minus human entropy
  double vqa_acc = 0.0;
  double confidence = 0.0;  // top softmax probability over the full vocabulary
};

struct EvalOptions {
  double floor = 1e-8;
  std::size_t ece_bins = 10;
  bool residual_bin = false;
  ConfidenceValues confidence_values{};
};

// Everything about a corpus that does not depend on temperature, computed
// once so that sweeping a temperature grid only redoes the softmax work.
// Samples are held in ascending question_id order and all reductions run in
// that order, so results do not depend on thread count.
class PreparedCorpus {
 public:
  static PreparedCorpus build(std::vector<ScoredSample> samples,
                              const SplitAssignment& split,
                              const Vocabulary& vocab,
                              const EvalOptions& opts = {});

  MetricsTable evaluate(double temperature) const;
  std::pair<MetricsTable, std::vector<PerSampleMetrics>> evaluate_detailed(
      double temperature) const;

  std::size_t size() const { return samples_.size(); }
  const EvalOptions& options() const { return opts_; }

 private:
  struct PreparedSample {
    std::int64_t question_id = 0;
    Level level = Level::low;
    double hud_score = 0.0;
    double max_logit = 0.0;
    double vqa_acc = 0.0;
    double human_entropy = 0.0;
    std::vector<double> logits;
    std::vector<std::ptrdiff_t> support_index;  // into vocabulary, -1 if absent
    std::vector<double> human;  // floored + renormalized, residual slot last
    std::vector<std::string> support;
    std::vector<std::string> unmatched;
  };

  struct SampleResult {
    double tvd = 0.0;
    double kl = 0.0;
    double entce_signed = 0.0;
    double confidence = 0.0;
  };

  SampleResult compute_sample(const PreparedSample& s, double inv_t,
                              std::vector<double>& model) const;
  MetricsTable aggregate(std::span<const SampleResult> results) const;

  std::vector<PreparedSample> samples_;
  EvalOptions opts_;
};

// The full pipeline for one temperature: score, drop single-label samples,
// split, and evaluate.
struct Evaluation {
  SplitAssignment split;
  HudStats hud;
  MetricsTable metrics;
  std::vector<PerSampleMetrics> per_sample;
  std::size_t removed_single_label = 0;
};

Evaluation evaluate(std::vector<EvalSample> samples, const Vocabulary& vocab,
                    double temperature, const EvalOptions& opts = {},
                    std::size_t histogram_bins = 20);

}  // namespace hudcalib
