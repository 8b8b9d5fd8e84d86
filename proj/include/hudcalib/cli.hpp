#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "hudcalib/calibrate.hpp"
#include "hudcalib/ingest.hpp"
#include "hudcalib/synth.hpp"

namespace hudcalib {

// Everything the subcommands need, already parsed. The runners validate the
// numeric fields, throw InputError for anything the user got wrong, and
// return the process exit code (always 0; errors leave via exceptions).
struct RunConfig {
  std::filesystem::path annotations;
  std::filesystem::path predictions;
  std::filesystem::path vocabulary;
  std::filesystem::path out_dir = ".";

  JoinPolicy join_policy = JoinPolicy::strict;
  ConfidenceValues confidence_values{};
  double temperature = 1.0;
  double floor = 1e-8;
  std::size_t ece_bins = 10;
  std::size_t histogram_bins = 20;
  bool residual_bin = false;

  double grid_start = kDefaultGridStart;
  double grid_stop = kDefaultGridStop;
  double grid_step = kDefaultGridStep;
  std::optional<Objective> objective;
  SetId fit_set = SetId::all;
};

int run_evaluate(const RunConfig& config);
int run_calibrate(const RunConfig& config);
int run_case_study(const RunConfig& config, std::int64_t question_id);
int run_synth(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace hudcalib
