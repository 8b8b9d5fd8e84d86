#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hudcalib/calibrate.hpp"
#include "hudcalib/ingest.hpp"
#include "hudcalib/kernels.hpp"
#include "hudcalib/metrics.hpp"
#include "hudcalib/report.hpp"
#include "hudcalib/synth.hpp"
#include "hudcalib/util.hpp"

using namespace hudcalib;

namespace {

std::vector<double> random_dist(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& x : p) {
    x = 0.01 + rng.next_double();
    total += x;
  }
  for (auto& x : p) x /= total;
  return p;
}

}  // namespace

TEST_CASE("entropy reference values") {
  CHECK_EQ(entropy(std::vector<double>{1.0}), 0.0);
  CHECK_EQ(entropy(std::vector<double>{0.5, 0.5}),
           doctest::Approx(0.69314718055994531).epsilon(1e-15));
  CHECK_EQ(entropy(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}),
           doctest::Approx(1.0986122886681097).epsilon(1e-14));
  // Zero entries contribute nothing.
  CHECK_EQ(entropy(std::vector<double>{0.0, 1.0, 0.0}), 0.0);

  // The worked-example distribution, exact and as four-digit decimals.
  const std::vector<double> exact = {1.0 / 3, 4.0 / 9, 2.0 / 9};
  CHECK_EQ(entropy(exact), doctest::Approx(1.0608569471580214).epsilon(1e-12));
  // The same distribution written as four-digit decimals; entropy does not
  // require an exactly unit sum.
  const std::vector<double> literals = {0.3333, 0.4444, 0.2222};
  CHECK_EQ(entropy(literals),
           doctest::Approx(1.0608508564631389).epsilon(1e-12));

  // Entropy at the scale of the probability floor.
  CHECK_EQ(entropy(std::vector<double>{1.0 - 1e-8, 1e-8}),
           doctest::Approx(1.9420680738952365e-7).epsilon(1e-9));
}

TEST_CASE("divergence reference values") {
  const std::vector<double> p = {0.5, 0.5};
  const std::vector<double> q = {0.25, 0.75};
  CHECK_EQ(tvd(p, q), doctest::Approx(0.25).epsilon(1e-15));
  CHECK_EQ(tvd(std::vector<double>{0.6, 0.4}, std::vector<double>{0.5, 0.5}),
           doctest::Approx(0.1).epsilon(1e-12));
  CHECK_EQ(kl(p, q), doctest::Approx(0.14384103622589046).epsilon(1e-14));
  CHECK(kl(p, q) != kl(q, p));
  CHECK_EQ(kl(p, p), 0.0);

  // Entropy gap between the uniform and the worked-example distribution.
  const double gap = std::abs(entropy(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}) -
                              entropy(std::vector<double>{1.0 / 3, 4.0 / 9, 2.0 / 9}));
  CHECK_EQ(gap, doctest::Approx(0.037755341510088327).epsilon(1e-11));
}

TEST_CASE("metric input validation") {
  const std::vector<double> p = {0.5, 0.5};
  CHECK_THROWS_AS(tvd(p, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(kl(p, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(kl(p, std::vector<double>{1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(entropy(std::vector<double>{-0.1, 1.1}), std::invalid_argument);
  const double nan = std::nan("");
  CHECK_THROWS_AS(entropy(std::vector<double>{nan, 1.0}), std::invalid_argument);
  // A zero under zero reference mass is fine.
  CHECK_EQ(kl(std::vector<double>{0.0, 1.0}, std::vector<double>{0.0, 1.0}), 0.0);
}

TEST_CASE("divergence properties on random distributions") {
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.next_below(9);
    const auto p = random_dist(rng, n);
    const auto q = random_dist(rng, n);
    const double t = tvd(p, q);
    CHECK_EQ(t, tvd(q, p));
    CHECK(t >= 0.0);
    CHECK(t <= 1.0);
    CHECK(kl(p, q) >= -1e-12);
    const double h = entropy(p);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(n)) + 1e-12);
  }
}

TEST_CASE("accuracy credit per predicted answer") {
  const std::vector<Annotation> answers = {
      {"white", Confidence::yes},
      {"gray", Confidence::yes},
      {"white", Confidence::maybe},
      {"silver", Confidence::maybe},
  };
  CHECK_EQ(vqa_accuracy(answers, "white"), 2.0 / 3.0);
  CHECK_EQ(vqa_accuracy(answers, "gray"), 1.0 / 3.0);
  CHECK_EQ(vqa_accuracy(answers, "zebra"), 0.0);

  std::vector<Annotation> many(10, {"cat", Confidence::yes});
  CHECK_EQ(vqa_accuracy(many, "cat"), 1.0);  // capped
}

TEST_CASE("expected calibration error") {
  const std::vector<ConfAcc> two = {{0.95, 1.0}, {0.85, 0.0}};
  CHECK_EQ(ece(two, 10), doctest::Approx(0.45).epsilon(1e-15));

  // Confidence 1.0 falls into the top bin, not out of range.
  const std::vector<ConfAcc> top = {{1.0, 1.0}};
  CHECK_EQ(ece(top, 10), 0.0);

  CHECK_THROWS_AS(ece(std::vector<ConfAcc>{}, 10), std::invalid_argument);
  CHECK_THROWS_AS(ece(two, 0), std::invalid_argument);
  CHECK_THROWS_AS(ece(std::vector<ConfAcc>{{1.5, 1.0}}, 10),
                  std::invalid_argument);
  CHECK_THROWS_AS(ece(std::vector<ConfAcc>{{-0.1, 1.0}}, 10),
                  std::invalid_argument);
}

TEST_CASE("ece does not depend on point order") {
  Rng rng(77);
  std::vector<ConfAcc> points;
  for (int i = 0; i < 200; ++i) {
    points.push_back({rng.next_double(), rng.next_below(4) == 0 ? 1.0 : 0.0});
  }
  const double base = ece(points, 10);
  CHECK(base >= 0.0);
  CHECK(base <= 1.0);

  auto permuted = points;
  std::reverse(permuted.begin(), permuted.end());
  std::rotate(permuted.begin(), permuted.begin() + 41, permuted.end());
  CHECK_EQ(ece(permuted, 10), doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("support alignment against the vocabulary") {
  const auto vocab = Vocabulary::from_entries({"a", "b", "c"});
  HumanDistribution hd;
  hd.labels = {"a", "b"};
  hd.mean_confidence = {1.0, 1.0};
  hd.probs = {0.5, 0.5};
  hd.hud_score = 1.0;
  const std::vector<double> model = {0.7, 0.2, 0.1};

  SUBCASE("plain") {
    const auto pair = align_support(hd, model, vocab);
    CHECK_EQ(pair.support, std::vector<std::string>{"a", "b"});
    CHECK_EQ(pair.human[0], doctest::Approx(0.5).epsilon(1e-12));
    CHECK_EQ(pair.model[0], doctest::Approx(7.0 / 9.0).epsilon(1e-12));
    CHECK_EQ(pair.model[1], doctest::Approx(2.0 / 9.0).epsilon(1e-12));
    CHECK(pair.unmatched.empty());
  }

  SUBCASE("residual bin keeps the model's off-support mass") {
    const auto pair = align_support(hd, model, vocab, 1e-8, true);
    REQUIRE_EQ(pair.support.size(), 3);
    CHECK_EQ(pair.support[2], "<residual>");
    CHECK_EQ(pair.model[2], doctest::Approx(0.1).epsilon(1e-9));
    CHECK_EQ(pair.human[2], doctest::Approx(1e-8).epsilon(1e-6));
    const double hsum = pair.human[0] + pair.human[1] + pair.human[2];
    CHECK_EQ(hsum, doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("labels missing from the vocabulary get floored mass") {
    HumanDistribution odd = hd;
    odd.labels = {"a", "zebra"};
    const auto pair = align_support(odd, model, vocab);
    CHECK_EQ(pair.unmatched, std::vector<std::string>{"zebra"});
    CHECK(pair.model[1] > 0.0);
    CHECK(pair.model[1] < 1e-7);
    CHECK(std::isfinite(kl(pair.human, pair.model)));
  }

  SUBCASE("model vector must span the vocabulary") {
    CHECK_THROWS_AS(align_support(hd, std::vector<double>{0.5, 0.5}, vocab),
                    std::invalid_argument);
  }
}

namespace {

// A tiny corpus with answers both inside and outside the vocabulary.
std::vector<EvalSample> tiny_corpus() {
  std::vector<EvalSample> samples(3);
  samples[0].question_id = 10;
  samples[0].answers = {{"red", Confidence::yes},
                        {"blue", Confidence::maybe},
                        {"red", Confidence::yes}};
  samples[0].logits = {2.0, -0.5, 0.25};
  samples[1].question_id = 11;
  samples[1].answers = {{"green", Confidence::yes}, {"mauve", Confidence::no}};
  samples[1].logits = {-1.0, 0.0, 3.0};
  samples[2].question_id = 12;
  samples[2].answers = {{"blue", Confidence::maybe}, {"green", Confidence::maybe}};
  samples[2].logits = {0.5, 0.5, -2.0};
  return samples;
}

}  // namespace

TEST_CASE("prepared evaluation matches the single-sample pieces") {
  const auto vocab = Vocabulary::from_entries({"red", "blue", "green"});
  const double temperature = 0.85;
  const EvalOptions opts;

  auto scored = score_samples(tiny_corpus(), opts.confidence_values);
  const auto split = split_terciles(scored);
  const auto prepared = PreparedCorpus::build(scored, split, vocab, opts);
  const auto [table, rows] = prepared.evaluate_detailed(temperature);
  REQUIRE_EQ(rows.size(), 3);

  for (const auto& row : rows) {
    const auto it = std::find_if(
        scored.begin(), scored.end(),
        [&](const ScoredSample& s) { return s.sample.question_id == row.question_id; });
    REQUIRE(it != scored.end());
    const auto probs = apply_temperature(it->sample.logits, temperature);
    const auto pair = align_support(it->human, probs, vocab, opts.floor,
                                    opts.residual_bin);
    CHECK_EQ(row.support, pair.support);
    CHECK_EQ(row.unmatched, pair.unmatched);
    REQUIRE_EQ(row.model.size(), pair.model.size());
    for (std::size_t j = 0; j < pair.model.size(); ++j) {
      CHECK_EQ(row.model[j], doctest::Approx(pair.model[j]).epsilon(1e-12));
      CHECK_EQ(row.human[j], doctest::Approx(pair.human[j]).epsilon(1e-12));
    }
    CHECK_EQ(row.tvd, doctest::Approx(tvd(pair.human, pair.model)).epsilon(1e-12));
    CHECK_EQ(row.kl, doctest::Approx(kl(pair.human, pair.model)).epsilon(1e-12));
    CHECK_EQ(row.entce_signed,
             doctest::Approx(entropy(pair.model) - entropy(pair.human))
                 .epsilon(1e-12));
    CHECK_EQ(row.vqa_acc,
             vqa_accuracy(it->sample.answers,
                          vocab.entry(kernels::active().argmax(
                              it->sample.logits.data(), it->sample.logits.size()))));

    // Top softmax probability over the full vocabulary.
    const double conf = *std::max_element(probs.begin(), probs.end());
    CHECK_EQ(row.confidence, doctest::Approx(conf).epsilon(1e-12));
  }

  // The All row aggregates the per-sample values.
  double mean_tvd = 0.0;
  for (const auto& row : rows) mean_tvd += row.tvd;
  mean_tvd /= 3.0;
  CHECK_EQ(table.row(SetId::all).tvd, doctest::Approx(mean_tvd).epsilon(1e-12));
  CHECK_EQ(table.row(SetId::all).sample_count, 3);
}

TEST_CASE("an empty metric set is rejected") {
  const auto vocab = Vocabulary::from_entries({"red", "blue", "green"});
  auto scored = score_samples(tiny_corpus(), ConfidenceValues{});
  SplitAssignment split;
  for (const auto& s : scored) {
    split.rows.push_back({s.sample.question_id, s.human.hud_score, Level::low});
    split.by_id.emplace(s.sample.question_id, Level::low);
  }
  split.sizes = {3, 0, 0};
  const auto prepared = PreparedCorpus::build(std::move(scored), split, vocab);
  CHECK_THROWS_AS(prepared.evaluate(1.0), std::invalid_argument);
}

TEST_CASE("results do not depend on the worker thread count") {
  SynthSpec spec;
  spec.sample_count = 300;
  spec.vocab_size = 40;
  spec.sigma = 0.8;
  spec.alpha = 1.4;
  spec.seed = 2024;
  const auto corpus = generate_corpus(spec);
  auto joined = join_samples(corpus.annotations, corpus.predictions,
                             JoinPolicy::strict);

  set_thread_cap(1);
  const auto serial = evaluate(joined.samples, corpus.vocabulary, 0.9);
  set_thread_cap(4);
  const auto threaded = evaluate(joined.samples, corpus.vocabulary, 0.9);
  set_thread_cap(0);

  CHECK_EQ(metrics_csv(serial.metrics), metrics_csv(threaded.metrics));
  REQUIRE_EQ(serial.per_sample.size(), threaded.per_sample.size());
  for (std::size_t i = 0; i < serial.per_sample.size(); ++i) {
    CHECK_EQ(serial.per_sample[i].kl, threaded.per_sample[i].kl);
    CHECK_EQ(serial.per_sample[i].confidence, threaded.per_sample[i].confidence);
  }
}
