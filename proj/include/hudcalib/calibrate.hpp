#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hudcalib/metrics.hpp"

namespace hudcalib {

// Temperature-scaled softmax over the full logit vector. The maximum logit
// is subtracted first, so any finite logits are safe.
std::vector<double> apply_temperature(std::span<const double> logits,
                                      double temperature);

inline constexpr double kDefaultGridStart = 0.1;
inline constexpr double kDefaultGridStop = 2.0;
inline constexpr double kDefaultGridStep = 0.05;

// Ascending temperature candidates start, start+step, ... When the span is a
// whole number of steps (to within rounding) the last candidate is exactly
// `stop`; otherwise the grid ends on the largest start+i*step below it.
std::vector<double> make_grid(double start = kDefaultGridStart,
                              double stop = kDefaultGridStop,
                              double step = kDefaultGridStep);

// What the fit minimizes, always on the chosen set's row.
enum class Objective { ece, mean_kl, mean_tvd, mean_entce };

std::string_view to_string(Objective objective);
std::optional<Objective> objective_from_string(std::string_view s);
double objective_score(const MetricsRow& row, Objective objective);

struct TemperatureFit {
  double temperature = 1.0;
  Objective objective = Objective::ece;
  std::vector<double> grid;
  std::vector<double> scores;  // objective per grid entry
  double best_score = 0.0;
  bool saturated = false;  // best landed on the last grid entry
};

// Exhaustive search over the grid; ties resolve to the smallest temperature.
TemperatureFit fit_temperature(const PreparedCorpus& corpus,
                               Objective objective,
                               std::span<const double> grid,
                               SetId fit_set = SetId::all);
TemperatureFit fit_temperature(const PreparedCorpus& corpus,
                               Objective objective);

// Before/after comparison. Deltas smaller than kUnchangedEps count as
// unchanged; accuracy improves upward, every other metric downward.
inline constexpr double kUnchangedEps = 1e-6;

enum class Direction { improved, worsened, unchanged };

struct ComparisonCell {
  double before = 0.0;
  double after = 0.0;
  Direction direction = Direction::unchanged;
};

struct ComparisonRow {
  // vqa_accuracy, tvd, kl, entce, ece
  std::array<ComparisonCell, 5> cells{};
  std::size_t sample_count = 0;
};

struct ComparisonTable {
  std::array<ComparisonRow, 4> rows{};  // All, Low, Medium, High
};

ComparisonTable calibration_report(const MetricsTable& before,
                                   const MetricsTable& after);

}  // namespace hudcalib
