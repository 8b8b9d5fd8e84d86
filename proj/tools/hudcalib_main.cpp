#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hudcalib/cli.hpp"

namespace {

void add_input_options(CLI::App* cmd, hudcalib::RunConfig& config) {
  cmd->add_option("--annotations", config.annotations,
                  "annotation JSON array")
      ->required();
  cmd->add_option("--predictions", config.predictions,
                  "model logits, one JSON object per line")
      ->required();
  cmd->add_option("--vocabulary", config.vocabulary,
                  "answer vocabulary, one entry per line")
      ->required();
  cmd->add_option("--out", config.out_dir, "output directory")
      ->capture_default_str();
  cmd->add_option("--conf-yes", config.confidence_values.yes,
                  "weight of a 'yes' confidence")
      ->capture_default_str();
  cmd->add_option("--conf-maybe", config.confidence_values.maybe,
                  "weight of a 'maybe' confidence")
      ->capture_default_str();
  cmd->add_option("--conf-no", config.confidence_values.no,
                  "weight of a 'no' confidence")
      ->capture_default_str();
  cmd->add_option("--floor", config.floor,
                  "probability floor applied before divergences")
      ->capture_default_str();
  cmd->add_flag("--residual-bin", config.residual_bin,
                "track the model's off-support mass in an extra bin");
}

void add_join_option(CLI::App* cmd, std::string& join_policy) {
  cmd->add_option("--join", join_policy,
                  "how to reconcile annotation and prediction sets")
      ->check(CLI::IsMember({"strict", "intersect"}))
      ->capture_default_str();
}

void add_binning_options(CLI::App* cmd, hudcalib::RunConfig& config) {
  cmd->add_option("--ece-bins", config.ece_bins,
                  "equal-width confidence bins for calibration error")
      ->capture_default_str();
  cmd->add_option("--histogram-bins", config.histogram_bins,
                  "bins for the uncertainty score histogram")
      ->capture_default_str();
}

hudcalib::SetId set_from_string(const std::string& s) {
  if (s == "All") return hudcalib::SetId::all;
  if (s == "Low") return hudcalib::SetId::low;
  if (s == "Medium") return hudcalib::SetId::medium;
  return hudcalib::SetId::high;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "evaluate classifier output against annotator disagreement and fit a "
      "softmax temperature"};
  app.set_config("--config", "", "read options from a config file");
  app.require_subcommand(1);

  hudcalib::RunConfig config;
  std::string join_policy = "strict";
  std::string objective;
  std::string fit_set = "All";
  std::int64_t question_id = 0;
  hudcalib::SynthSpec spec;
  std::string synth_out = "synth";

  auto* eval = app.add_subcommand(
      "evaluate", "score predictions against the annotator distributions");
  add_input_options(eval, config);
  add_join_option(eval, join_policy);
  add_binning_options(eval, config);
  eval->add_option("--temperature", config.temperature,
                   "softmax temperature to evaluate at")
      ->capture_default_str();

  auto* cal = app.add_subcommand(
      "calibrate", "fit a softmax temperature over a grid and compare");
  add_input_options(cal, config);
  add_join_option(cal, join_policy);
  add_binning_options(cal, config);
  cal->add_option("--objective", objective, "score the fit minimizes")
      ->check(CLI::IsMember({"ece", "mean_kl", "mean_tvd", "mean_entce"}));
  cal->add_option("--grid-start", config.grid_start,
                  "lowest candidate temperature")
      ->capture_default_str();
  cal->add_option("--grid-stop", config.grid_stop,
                  "highest candidate temperature")
      ->capture_default_str();
  cal->add_option("--grid-step", config.grid_step, "grid spacing")
      ->capture_default_str();
  cal->add_option("--fit-set", fit_set, "uncertainty set the fit scores")
      ->check(CLI::IsMember({"All", "Low", "Medium", "High"}))
      ->capture_default_str();

  auto* cs = app.add_subcommand(
      "case-study", "dump one sample's distributions label by label");
  add_input_options(cs, config);
  add_join_option(cs, join_policy);
  cs->add_option("--id", question_id, "question_id to inspect")->required();
  cs->add_option("--temperature", config.temperature,
                 "calibrated temperature to show next to T=1")
      ->capture_default_str();

  auto* syn = app.add_subcommand(
      "synth", "generate a synthetic corpus with known distributions");
  syn->add_option("--samples", spec.sample_count, "number of samples")
      ->capture_default_str();
  syn->add_option("--vocab-size", spec.vocab_size, "vocabulary entries")
      ->capture_default_str();
  syn->add_option("--annotators", spec.annotators, "annotators per sample")
      ->capture_default_str();
  syn->add_option("--labels-min", spec.labels_min,
                  "fewest distinct answers per sample")
      ->capture_default_str();
  syn->add_option("--labels-max", spec.labels_max,
                  "most distinct answers per sample")
      ->capture_default_str();
  syn->add_option("--label-weights", spec.label_count_weights,
                  "probability of each distinct-answer count");
  syn->add_option("--confidence-weights", spec.confidence_weights,
                  "probability of yes, maybe, no confidences");
  syn->add_option("--alpha", spec.alpha, "logit scale (true temperature)")
      ->capture_default_str();
  syn->add_option("--sigma", spec.sigma, "gaussian logit noise")
      ->capture_default_str();
  syn->add_option("--seed", spec.seed, "generator seed")
      ->capture_default_str();
  syn->add_option("--out", synth_out, "output directory")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    config.join_policy = join_policy == "intersect"
                             ? hudcalib::JoinPolicy::intersect
                             : hudcalib::JoinPolicy::strict;
    if (!objective.empty()) {
      config.objective = hudcalib::objective_from_string(objective);
    }
    config.fit_set = set_from_string(fit_set);

    if (eval->parsed()) return hudcalib::run_evaluate(config);
    if (cal->parsed()) return hudcalib::run_calibrate(config);
    if (cs->parsed()) return hudcalib::run_case_study(config, question_id);
    if (syn->parsed()) return hudcalib::run_synth(spec, synth_out);
  } catch (const hudcalib::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
