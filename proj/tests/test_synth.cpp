#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hudcalib/ingest.hpp"
#include "hudcalib/metrics.hpp"
#include "hudcalib/calibrate.hpp"
#include "hudcalib/synth.hpp"

using namespace hudcalib;
namespace fs = std::filesystem;

namespace {

std::string serialize(const Corpus& corpus) {
  std::ostringstream out;
  write_annotations(out, corpus.annotations);
  write_predictions(out, corpus.predictions);
  write_vocabulary(out, corpus.vocabulary);
  return out.str();
}

PreparedCorpus prepare(const Corpus& corpus, const EvalOptions& opts = {}) {
  auto joined = join_samples(corpus.annotations, corpus.predictions,
                             JoinPolicy::strict);
  auto scored = score_samples(std::move(joined.samples),
                              opts.confidence_values);
  auto filtered = filter_single_label(std::move(scored));
  const auto split = split_terciles(filtered.retained);
  return PreparedCorpus::build(std::move(filtered.retained), split,
                               corpus.vocabulary, opts);
}

void check_tables_close(const MetricsTable& a, const MetricsTable& b,
                        double tol) {
  for (auto set : {SetId::all, SetId::low, SetId::medium, SetId::high}) {
    const auto& x = a.row(set);
    const auto& y = b.row(set);
    CHECK_EQ(x.sample_count, y.sample_count);
    CHECK_EQ(x.vqa_acc, doctest::Approx(y.vqa_acc).epsilon(tol));
    CHECK_EQ(x.tvd, doctest::Approx(y.tvd).epsilon(tol));
    CHECK_EQ(x.kl, doctest::Approx(y.kl).epsilon(tol));
    CHECK_EQ(x.entce, doctest::Approx(y.entce).epsilon(tol));
    CHECK_EQ(x.ece, doctest::Approx(y.ece).epsilon(tol));
  }
}

}  // namespace

TEST_CASE("recipe validation rejects inconsistent settings") {
  SynthSpec spec;
  spec.sample_count = 0;
  CHECK_THROWS_AS(generate_corpus(spec), InputError);

  spec = SynthSpec{};
  spec.labels_min = 1;
  CHECK_THROWS_AS(generate_corpus(spec), InputError);

  spec = SynthSpec{};
  spec.vocab_size = 3;  // below labels_max
  CHECK_THROWS_AS(generate_corpus(spec), InputError);

  spec = SynthSpec{};
  spec.annotators = 2;
  CHECK_THROWS_AS(generate_corpus(spec), InputError);

  spec = SynthSpec{};
  spec.label_count_weights = {0.5, 0.5};  // needs 3 entries for 2..4 labels
  CHECK_THROWS_AS(generate_corpus(spec), InputError);

  spec = SynthSpec{};
  spec.confidence_weights = {0.9, 0.2, 0.1};  // does not sum to 1
  CHECK_THROWS_AS(generate_corpus(spec), InputError);

  spec = SynthSpec{};
  spec.alpha = 0.0;
  CHECK_THROWS_AS(generate_corpus(spec), InputError);

  spec = SynthSpec{};
  spec.sigma = -0.5;
  CHECK_THROWS_AS(generate_corpus(spec), InputError);
}

TEST_CASE("generation is a pure function of the recipe") {
  SynthSpec spec;
  spec.sample_count = 120;
  spec.vocab_size = 25;
  spec.sigma = 0.5;
  spec.seed = 99;
  const auto a = generate_corpus(spec);
  const auto b = generate_corpus(spec);
  CHECK_EQ(serialize(a), serialize(b));

  spec.seed = 100;
  const auto c = generate_corpus(spec);
  CHECK(serialize(a) != serialize(c));
}

TEST_CASE("generated corpora satisfy the recipe") {
  SynthSpec spec;
  spec.sample_count = 200;
  spec.vocab_size = 30;
  spec.labels_min = 2;
  spec.labels_max = 4;
  spec.seed = 5;
  const auto corpus = generate_corpus(spec);
  REQUIRE_EQ(corpus.annotations.size(), 200);
  REQUIRE_EQ(corpus.predictions.size(), 200);
  CHECK_EQ(corpus.vocabulary.size(), 30);
  REQUIRE_EQ(corpus.true_distributions.size(), 200);

  for (std::size_t i = 0; i < corpus.annotations.size(); ++i) {
    const auto& sample = corpus.annotations[i];
    CHECK_EQ(sample.answers.size(), spec.annotators);

    // The written human distribution is exactly what scoring reconstructs.
    const auto hd = build_human_distribution(sample.answers, ConfidenceValues{});
    const auto& truth = corpus.true_distributions[i];
    CHECK_EQ(truth.question_id, sample.question_id);
    REQUIRE_EQ(truth.labels, hd.labels);
    CHECK_EQ(truth.probs, hd.probs);
    CHECK_EQ(truth.hud_score, hd.hud_score);
    CHECK(hd.labels.size() >= spec.labels_min);
    CHECK(hd.labels.size() <= spec.labels_max);
    for (const auto& label : hd.labels) {
      CHECK(corpus.vocabulary.find(label).has_value());
    }

    double total = 0.0;
    for (double p : hd.probs) total += p;
    CHECK_EQ(total, doctest::Approx(1.0).epsilon(1e-12));

    CHECK_EQ(corpus.predictions[i].question_id, sample.question_id);
    CHECK_EQ(corpus.predictions[i].logits.size(), spec.vocab_size);
  }
}

TEST_CASE("a noiseless unit-scale corpus is already calibrated") {
  SynthSpec spec;
  spec.sample_count = 150;
  spec.vocab_size = 40;
  spec.alpha = 1.0;
  spec.sigma = 0.0;
  spec.seed = 12;
  const auto corpus = generate_corpus(spec);
  const auto prepared = prepare(corpus);
  const auto table = prepared.evaluate(1.0);
  CHECK(table.row(SetId::all).kl < 1e-6);
  CHECK(table.row(SetId::all).tvd < 1e-6);
  CHECK(table.row(SetId::all).entce < 1e-6);
}

TEST_CASE("written corpora read back exactly") {
  SynthSpec spec;
  spec.sample_count = 80;
  spec.vocab_size = 20;
  spec.sigma = 0.3;
  spec.seed = 77;
  const auto corpus = generate_corpus(spec);
  const fs::path dir =
      fs::temp_directory_path() / "hudcalib_synth_roundtrip";
  fs::remove_all(dir);
  write_corpus(corpus, dir);

  const auto ann = load_annotations(dir / "annotations.json");
  const auto preds = load_predictions(dir / "predictions.jsonl", 20);
  const auto vocab = load_vocabulary(dir / "vocabulary.txt");
  CHECK(fs::exists(dir / "true_distributions.jsonl"));

  REQUIRE_EQ(ann.size(), corpus.annotations.size());
  REQUIRE_EQ(preds.size(), corpus.predictions.size());
  CHECK_EQ(vocab.entries(), corpus.vocabulary.entries());
  for (std::size_t i = 0; i < ann.size(); ++i) {
    CHECK_EQ(ann[i].question_id, corpus.annotations[i].question_id);
    CHECK_EQ(ann[i].image_id, corpus.annotations[i].image_id);
    REQUIRE_EQ(ann[i].answers.size(), corpus.annotations[i].answers.size());
    for (std::size_t j = 0; j < ann[i].answers.size(); ++j) {
      CHECK_EQ(ann[i].answers[j].answer, corpus.annotations[i].answers[j].answer);
      CHECK(ann[i].answers[j].confidence ==
            corpus.annotations[i].answers[j].confidence);
    }
    CHECK_EQ(preds[i].logits, corpus.predictions[i].logits);  // bit-exact
  }
  fs::remove_all(dir);
}

TEST_CASE("the straight-line evaluator agrees with the pipeline") {
  struct Case {
    std::uint64_t seed;
    double alpha;
    double sigma;
    double temperature;
    bool residual;
  };
  const Case cases[] = {
      {21, 1.0, 0.0, 1.0, false},
      {22, 1.3, 0.6, 1.0, false},
      {23, 0.8, 1.2, 0.7, false},
      {24, 2.0, 0.4, 1.3, true},
      {25, 1.0, 2.0, 0.5, true},
  };
  for (const auto& c : cases) {
    CAPTURE(c.seed);
    SynthSpec spec;
    spec.sample_count = 250;
    spec.vocab_size = 35;
    spec.alpha = c.alpha;
    spec.sigma = c.sigma;
    spec.seed = c.seed;
    const auto corpus = generate_corpus(spec);

    EvalOptions opts;
    opts.residual_bin = c.residual;
    const auto fast = prepare(corpus, opts).evaluate(c.temperature);
    const auto slow = brute_force_evaluate(corpus, c.temperature, opts);
    check_tables_close(fast, slow, 1e-9);
  }
}

TEST_CASE("fitting beats the identity temperature on a miscalibrated corpus") {
  SynthSpec spec;
  spec.sample_count = 300;
  spec.vocab_size = 30;
  spec.alpha = 1.8;
  spec.sigma = 0.3;
  spec.seed = 41;
  const auto corpus = generate_corpus(spec);
  const auto prepared = prepare(corpus);
  const double before = prepared.evaluate(1.0).row(SetId::all).kl;
  const auto fit = fit_temperature(prepared, Objective::mean_kl);
  const double after = prepared.evaluate(fit.temperature).row(SetId::all).kl;
  CHECK(after < before);
  CHECK(fit.temperature > 1.0);
}
