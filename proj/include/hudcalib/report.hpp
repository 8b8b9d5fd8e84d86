#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "hudcalib/calibrate.hpp"
#include "hudcalib/hud.hpp"
#include "hudcalib/metrics.hpp"

namespace hudcalib {

// CSV and markdown renderings of the metric tables. CSV cells carry six
// significant digits; parse_metrics_csv accepts exactly what metrics_csv
// emits, so parse-then-serialize reproduces the bytes.
std::string metrics_csv(const MetricsTable& table);
std::string metrics_markdown(const MetricsTable& table);
MetricsTable parse_metrics_csv(std::istream& in);

std::string split_manifest_csv(const SplitAssignment& split);
std::string hud_stats_csv(const HudStats& stats);
std::string hud_histogram_csv(const HudStats& stats);

void per_sample_jsonl(std::ostream& out,
                      std::span<const PerSampleMetrics> samples);

std::string fit_json(const TemperatureFit& fit);

std::string comparison_markdown(const ComparisonTable& table,
                                double temperature, Objective objective);

// One sample rendered label by label: what each answer would score, how the
// annotators leaned, and where the model puts its mass before and after
// temperature scaling. Both aligned pairs must share one support.
std::string case_study_json(const EvalSample& sample,
                            const HumanDistribution& human,
                            const AlignedPair& uncalibrated,
                            const AlignedPair& calibrated, double temperature);

}  // namespace hudcalib
