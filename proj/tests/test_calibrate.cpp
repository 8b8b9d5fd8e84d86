#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hudcalib/calibrate.hpp"
#include "hudcalib/ingest.hpp"
#include "hudcalib/synth.hpp"
#include "hudcalib/util.hpp"

using namespace hudcalib;

namespace {

std::size_t argmax_of(const std::vector<double>& xs) {
  return static_cast<std::size_t>(
      std::max_element(xs.begin(), xs.end()) - xs.begin());
}

// A prepared corpus from a synthetic recipe, ready for fitting.
PreparedCorpus prepared_synth(double alpha, double sigma, std::uint64_t seed,
                              std::size_t n = 400) {
  SynthSpec spec;
  spec.sample_count = n;
  spec.vocab_size = 30;
  spec.alpha = alpha;
  spec.sigma = sigma;
  spec.seed = seed;
  const auto corpus = generate_corpus(spec);
  auto joined = join_samples(corpus.annotations, corpus.predictions,
                             JoinPolicy::strict);
  auto scored = score_samples(std::move(joined.samples), ConfidenceValues{});
  auto filtered = filter_single_label(std::move(scored));
  const auto split = split_terciles(filtered.retained);
  return PreparedCorpus::build(std::move(filtered.retained), split,
                               corpus.vocabulary);
}

}  // namespace

TEST_CASE("temperature-scaled softmax reference values") {
  const std::vector<double> logits = {2.0, 0.0};
  const auto p1 = apply_temperature(logits, 1.0);
  CHECK_EQ(p1[0], doctest::Approx(0.88079707797788244).epsilon(1e-14));
  CHECK_EQ(p1[1], doctest::Approx(0.11920292202211756).epsilon(1e-14));
  const auto p2 = apply_temperature(logits, 2.0);
  CHECK_EQ(p2[0], doctest::Approx(0.73105857863000488).epsilon(1e-14));
  CHECK_EQ(p2[1], doctest::Approx(0.26894142136999512).epsilon(1e-14));

  CHECK_THROWS_AS(apply_temperature(logits, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(apply_temperature(logits, -1.0), std::invalid_argument);
}

TEST_CASE("softmax handles extreme logits and sums to one") {
  const std::vector<double> huge = {1e4, -1e4, 0.0};
  const auto p = apply_temperature(huge, 1.0);
  CHECK_EQ(p[0], doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::isfinite(p[1]));
  CHECK(std::isfinite(p[2]));

  Rng rng(7);
  for (std::size_t n : {2, 5, 100, 3000}) {
    std::vector<double> logits(n);
    for (auto& l : logits) l = -20.0 + 40.0 * rng.next_double();
    for (double t : {0.1, 1.0, 2.0}) {
      const auto probs = apply_temperature(logits, t);
      double sum = 0.0;
      for (double x : probs) sum += x;
      CHECK_EQ(sum, doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("temperature never moves the argmax") {
  Rng rng(8);
  const auto grid = make_grid();
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> logits(2 + rng.next_below(40));
    for (auto& l : logits) l = -8.0 + 16.0 * rng.next_double();
    const std::size_t before = argmax_of(logits);
    for (double t : grid) {
      CHECK_EQ(argmax_of(apply_temperature(logits, t)), before);
    }
  }
}

TEST_CASE("entropy grows with temperature") {
  Rng rng(9);
  const auto grid = make_grid();
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits(2 + rng.next_below(10));
    for (auto& l : logits) l = -5.0 + 10.0 * rng.next_double();
    double prev = -1.0;
    for (double t : grid) {
      const double h = entropy(apply_temperature(logits, t));
      CHECK(h >= prev - 1e-12);
      prev = h;
    }
  }
}

TEST_CASE("grid construction") {
  const auto grid = make_grid();
  REQUIRE_EQ(grid.size(), 39);
  CHECK_EQ(grid.front(), 0.1);
  CHECK_EQ(grid.back(), 2.0);  // exact, not 0.1 + 38*0.05 rounding noise
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK_EQ(grid[i] - grid[i - 1], doctest::Approx(0.05).epsilon(1e-9));
  }

  CHECK_EQ(make_grid(1.0, 1.0, 0.05), std::vector<double>{1.0});
  const auto ragged = make_grid(0.1, 0.2, 0.03);
  REQUIRE_EQ(ragged.size(), 4);
  CHECK_EQ(ragged.back(), doctest::Approx(0.19).epsilon(1e-12));

  CHECK_THROWS_AS(make_grid(0.0, 1.0, 0.1), InputError);
  CHECK_THROWS_AS(make_grid(0.5, 1.0, 0.0), InputError);
  CHECK_THROWS_AS(make_grid(1.0, 0.5, 0.1), InputError);
}

TEST_CASE("objective names round-trip") {
  for (auto obj : {Objective::ece, Objective::mean_kl, Objective::mean_tvd,
                   Objective::mean_entce}) {
    CHECK(objective_from_string(to_string(obj)) == obj);
  }
  CHECK(objective_from_string("bogus") == std::nullopt);

  MetricsRow row;
  row.ece = 1.0;
  row.kl = 2.0;
  row.tvd = 3.0;
  row.entce = 4.0;
  CHECK_EQ(objective_score(row, Objective::ece), 1.0);
  CHECK_EQ(objective_score(row, Objective::mean_kl), 2.0);
  CHECK_EQ(objective_score(row, Objective::mean_tvd), 3.0);
  CHECK_EQ(objective_score(row, Objective::mean_entce), 4.0);
}

TEST_CASE("fit recovers the scale of a clean synthetic corpus") {
  const auto corpus = prepared_synth(1.5, 0.0, 31);
  const auto fit = fit_temperature(corpus, Objective::mean_kl);
  CHECK_EQ(fit.temperature, doctest::Approx(1.5).epsilon(1e-9));
  CHECK_FALSE(fit.saturated);
  REQUIRE_EQ(fit.scores.size(), fit.grid.size());
  CHECK_EQ(fit.best_score,
           objective_score(corpus.evaluate(fit.temperature).row(SetId::all),
                           Objective::mean_kl));
  CHECK(fit.best_score < 1e-6);
}

TEST_CASE("a fit landing on the grid edge is flagged") {
  const auto corpus = prepared_synth(2.0, 0.0, 32);
  const auto fit = fit_temperature(corpus, Objective::mean_kl);
  CHECK_EQ(fit.temperature, 2.0);
  CHECK(fit.saturated);
}

TEST_CASE("ties resolve to the smallest temperature") {
  // Uniform logits give the uniform softmax at every temperature, so all
  // grid scores are identical.
  std::vector<EvalSample> samples(3);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].question_id = static_cast<std::int64_t>(i);
    samples[i].answers = {{"a", Confidence::yes}, {"b", Confidence::maybe}};
    samples[i].logits = {0.5, 0.5, 0.5};
  }
  const auto vocab = Vocabulary::from_entries({"a", "b", "c"});
  auto scored = score_samples(std::move(samples), ConfidenceValues{});
  const auto split = split_terciles(scored);
  const auto prepared = PreparedCorpus::build(std::move(scored), split, vocab);
  const auto fit = fit_temperature(prepared, Objective::mean_kl);
  CHECK_EQ(fit.temperature, 0.1);
  const double first = fit.scores.front();
  for (double s : fit.scores) CHECK_EQ(s, first);
}

TEST_CASE("fitting on one uncertainty set uses that set's row") {
  const auto corpus = prepared_synth(1.3, 0.4, 33);
  const auto grid = make_grid();
  const auto fit = fit_temperature(corpus, Objective::mean_tvd, grid,
                                   SetId::high);
  REQUIRE_EQ(fit.scores.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double want = objective_score(corpus.evaluate(grid[i]).row(SetId::high),
                                        Objective::mean_tvd);
    CHECK_EQ(fit.scores[i], want);
  }
}

TEST_CASE("empty grid is rejected") {
  const auto corpus = prepared_synth(1.0, 0.0, 34, 30);
  CHECK_THROWS_AS(fit_temperature(corpus, Objective::mean_kl,
                                  std::vector<double>{}, SetId::all),
                  std::invalid_argument);
}

TEST_CASE("before/after comparison marks directions per metric") {
  MetricsTable before;
  MetricsTable after;
  for (auto set : {SetId::all, SetId::low, SetId::medium, SetId::high}) {
    before.row(set) = {0.8, 0.4, 1.701, 0.5, 0.2, 100};
    after.row(set) = {0.8, 0.3, 3.232, 0.5, 0.25, 100};
  }
  // Improved accuracy counts upward, everything else downward.
  after.row(SetId::low).vqa_acc = 0.9;
  before.row(SetId::medium).kl = 1.886;
  after.row(SetId::medium).kl = 0.731;

  const auto table = calibration_report(before, after);
  const auto& all = table.rows[0];
  CHECK(all.cells[0].direction == Direction::unchanged);  // accuracy equal
  CHECK(all.cells[1].direction == Direction::improved);   // tvd down
  CHECK(all.cells[2].direction == Direction::worsened);   // kl 1.701 -> 3.232
  CHECK(all.cells[3].direction == Direction::unchanged);
  CHECK(all.cells[4].direction == Direction::worsened);   // ece up
  CHECK(table.rows[1].cells[0].direction == Direction::improved);
  CHECK(table.rows[2].cells[2].direction == Direction::improved);  // 1.886 -> 0.731
  CHECK_EQ(all.cells[2].before, 1.701);
  CHECK_EQ(all.cells[2].after, 3.232);
  CHECK_EQ(all.sample_count, 100);

  // Deltas below the reporting epsilon count as unchanged.
  MetricsTable nudged = before;
  nudged.row(SetId::all).tvd += 1e-9;
  const auto tiny = calibration_report(before, nudged);
  CHECK(tiny.rows[0].cells[1].direction == Direction::unchanged);

  MetricsTable mismatched = after;
  mismatched.row(SetId::high).sample_count = 99;
  CHECK_THROWS_AS(calibration_report(before, mismatched), std::invalid_argument);
}
