#include "hudcalib/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include "hudcalib/hud.hpp"
#include "hudcalib/metrics.hpp"
#include "hudcalib/report.hpp"
#include "hudcalib/util.hpp"

namespace hudcalib {

namespace {

void validate_common(const RunConfig& config) {
  if (!(config.temperature > 0.0) || !std::isfinite(config.temperature)) {
    throw InputError("temperature must be positive");
  }
  if (!(config.floor > 0.0) || !std::isfinite(config.floor)) {
    throw InputError("floor must be positive");
  }
  if (config.ece_bins == 0) {
    throw InputError("ece bins must be at least 1");
  }
  if (config.histogram_bins == 0) {
    throw InputError("histogram bins must be at least 1");
  }
  const ConfidenceValues& cv = config.confidence_values;
  for (const double v : {cv.yes, cv.maybe, cv.no}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InputError("confidence values must be positive");
    }
  }
}

EvalOptions options_from(const RunConfig& config) {
  EvalOptions opts;
  opts.floor = config.floor;
  opts.ece_bins = config.ece_bins;
  opts.residual_bin = config.residual_bin;
  opts.confidence_values = config.confidence_values;
  return opts;
}

struct LoadedInputs {
  Vocabulary vocab;
  JoinResult joined;
};

LoadedInputs load_inputs(const RunConfig& config) {
  LoadedInputs in;
  in.vocab = load_vocabulary(config.vocabulary);
  auto predictions = load_predictions(config.predictions, in.vocab.size());
  auto annotations = load_annotations(config.annotations);
  in.joined = join_samples(std::move(annotations), std::move(predictions),
                           config.join_policy);
  if (in.joined.annotations_without_prediction > 0 ||
      in.joined.predictions_without_annotation > 0) {
    std::cout << "join: dropped " << in.joined.annotations_without_prediction
              << " annotations without predictions and "
              << in.joined.predictions_without_annotation
              << " predictions without annotations\n";
  }
  return in;
}

std::filesystem::path prepare_out_dir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) {
    throw InputError("cannot create output directory " +
                     config.out_dir.string());
  }
  return config.out_dir;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream f(path);
  f << content;
  if (!f.flush()) throw InputError("cannot write " + path.string());
}

}  // namespace

int run_evaluate(const RunConfig& config) {
  validate_common(config);
  auto in = load_inputs(config);
  const Evaluation ev =
      evaluate(std::move(in.joined.samples), in.vocab, config.temperature,
               options_from(config), config.histogram_bins);

  const auto dir = prepare_out_dir(config);
  write_file(dir / "metrics_before.csv", metrics_csv(ev.metrics));
  write_file(dir / "metrics_before.md", metrics_markdown(ev.metrics));
  write_file(dir / "split_manifest.csv", split_manifest_csv(ev.split));
  write_file(dir / "hud_stats.csv", hud_stats_csv(ev.hud));
  write_file(dir / "hud_histogram.csv", hud_histogram_csv(ev.hud));
  {
    std::ofstream f(dir / "per_sample.jsonl");
    per_sample_jsonl(f, ev.per_sample);
    if (!f.flush()) {
      throw InputError("cannot write " + (dir / "per_sample.jsonl").string());
    }
  }

  std::cout << "evaluated " << ev.per_sample.size() << " samples at T="
            << format_sig(config.temperature, 6) << " ("
            << ev.removed_single_label << " single-label samples removed)\n";
  std::cout << metrics_markdown(ev.metrics);
  std::cout << "outputs in " << dir.string() << "\n";
  return 0;
}

int run_calibrate(const RunConfig& config) {
  validate_common(config);
  if (!config.objective) {
    throw InputError("no objective selected");
  }
  auto in = load_inputs(config);
  const EvalOptions opts = options_from(config);

  auto scored = score_samples(std::move(in.joined.samples),
                              opts.confidence_values);
  auto filtered = filter_single_label(std::move(scored));
  const SplitAssignment split = split_terciles(filtered.retained);
  const PreparedCorpus prepared = PreparedCorpus::build(
      std::move(filtered.retained), split, in.vocab, opts);

  const MetricsTable before = prepared.evaluate(1.0);
  const auto grid =
      make_grid(config.grid_start, config.grid_stop, config.grid_step);
  const TemperatureFit fit =
      fit_temperature(prepared, *config.objective, grid, config.fit_set);
  const MetricsTable after = prepared.evaluate(fit.temperature);
  const ComparisonTable comparison = calibration_report(before, after);

  const auto dir = prepare_out_dir(config);
  write_file(dir / "fit.json", fit_json(fit));
  write_file(dir / "metrics_after.csv", metrics_csv(after));
  write_file(dir / "metrics_after.md", metrics_markdown(after));
  write_file(dir / "comparison.md",
             comparison_markdown(comparison, fit.temperature, fit.objective));

  if (fit.saturated) {
    std::cerr << "warning: fitted temperature "
              << format_sig(fit.temperature, 6)
              << " sits at the edge of the grid; consider widening it\n";
  }
  std::cout << "fitted temperature " << format_sig(fit.temperature, 6)
            << " (objective " << to_string(fit.objective) << ", best score "
            << format_sig(fit.best_score, 6) << ")\n";
  std::cout << "outputs in " << dir.string() << "\n";
  return 0;
}

int run_case_study(const RunConfig& config, std::int64_t question_id) {
  validate_common(config);
  auto in = load_inputs(config);

  const auto it = std::find_if(
      in.joined.samples.begin(), in.joined.samples.end(),
      [&](const EvalSample& s) { return s.question_id == question_id; });
  if (it == in.joined.samples.end()) {
    throw InputError("question_id " + std::to_string(question_id) +
                     " not found in the joined corpus");
  }
  const EvalSample& sample = *it;
  const HumanDistribution human =
      build_human_distribution(sample.answers, config.confidence_values);
  const auto uncalibrated_probs = apply_temperature(sample.logits, 1.0);
  const auto calibrated_probs =
      apply_temperature(sample.logits, config.temperature);
  const AlignedPair uncalibrated =
      align_support(human, uncalibrated_probs, in.vocab, config.floor,
                    config.residual_bin);
  const AlignedPair calibrated =
      align_support(human, calibrated_probs, in.vocab, config.floor,
                    config.residual_bin);

  const auto dir = prepare_out_dir(config);
  const auto path = dir / ("case_" + std::to_string(question_id) + ".json");
  write_file(path, case_study_json(sample, human, uncalibrated, calibrated,
                                   config.temperature));
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int run_synth(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  const Corpus corpus = generate_corpus(spec);
  write_corpus(corpus, out_dir);
  std::cout << "seed: " << spec.seed << "\n";
  std::cout << "generated " << corpus.annotations.size() << " samples over "
            << corpus.vocabulary.size() << " vocabulary entries in "
            << out_dir.string() << "\n";
  return 0;
}

}  // namespace hudcalib
