#include "hudcalib/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "hudcalib/hud.hpp"
#include "hudcalib/ingest.hpp"
#include "hudcalib/util.hpp"
#include "json.hpp"

namespace hudcalib {

namespace {

// Probability parked on each out-of-support vocabulary entry, small enough
// to not disturb the support probabilities beyond ~1e-9.
constexpr double kOffSupportProb = 1e-12;

void validate(const SynthSpec& spec) {
  if (spec.sample_count == 0) {
    throw InputError("synth: sample_count must be at least 1");
  }
  if (spec.annotators == 0) {
    throw InputError("synth: annotators must be at least 1");
  }
  if (spec.labels_min < 2) {
    throw InputError("synth: labels_min must be at least 2");
  }
  if (spec.labels_max < spec.labels_min) {
    throw InputError("synth: labels_max must not be below labels_min");
  }
  if (spec.vocab_size < spec.labels_max) {
    throw InputError("synth: vocab_size must be at least labels_max");
  }
  if (spec.annotators < spec.labels_max) {
    throw InputError("synth: annotators must be at least labels_max");
  }
  const std::size_t want = spec.labels_max - spec.labels_min + 1;
  if (spec.label_count_weights.size() != want) {
    throw InputError("synth: label_count_weights needs " + std::to_string(want) +
                     " entries for labels " + std::to_string(spec.labels_min) +
                     ".." + std::to_string(spec.labels_max));
  }
  if (spec.confidence_weights.size() != 3) {
    throw InputError("synth: confidence_weights needs 3 entries (yes, maybe, no)");
  }
  const auto check_weights = [](const std::vector<double>& w, const char* name) {
    double total = 0.0;
    for (const double x : w) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw InputError(std::string("synth: ") + name +
                         " must be non-negative");
      }
      total += x;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
      throw InputError(std::string("synth: ") + name + " must sum to 1");
    }
  };
  check_weights(spec.label_count_weights, "label_count_weights");
  check_weights(spec.confidence_weights, "confidence_weights");
  if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha)) {
    throw InputError("synth: alpha must be positive");
  }
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) {
    throw InputError("synth: sigma must be non-negative");
  }
}

Vocabulary make_vocabulary(std::size_t size) {
  std::vector<std::string> entries;
  entries.reserve(size);
  char buf[32];
  for (std::size_t i = 0; i < size; ++i) {
    std::snprintf(buf, sizeof(buf), "ans_%04zu", i);
    entries.emplace_back(buf);
  }
  return Vocabulary::from_entries(std::move(entries));
}

}  // namespace

Corpus generate_corpus(const SynthSpec& spec) {
  validate(spec);

  Corpus corpus;
  corpus.vocabulary = make_vocabulary(spec.vocab_size);
  corpus.annotations.reserve(spec.sample_count);
  corpus.predictions.reserve(spec.sample_count);
  corpus.true_distributions.reserve(spec.sample_count);

  static constexpr Confidence kConfidenceByDraw[3] = {
      Confidence::yes, Confidence::maybe, Confidence::no};
  const ConfidenceValues values{};
  const double off_logit = std::log(kOffSupportProb);

  for (std::size_t i = 0; i < spec.sample_count; ++i) {
    const auto qid = static_cast<std::int64_t>(i + 1);
    Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(qid)));

    const std::size_t k =
        spec.labels_min + rng.pick_weighted(spec.label_count_weights);

    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    while (chosen.size() < k) {
      const std::size_t c = rng.next_below(spec.vocab_size);
      if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) {
        chosen.push_back(c);
      }
    }

    // The first k annotators pin one label each so every drawn label is
    // actually used; the rest spread uniformly.
    std::vector<std::size_t> assignment(spec.annotators);
    for (std::size_t j = 0; j < spec.annotators; ++j) {
      assignment[j] = j < k ? j : rng.next_below(k);
    }

    AnnotatedSample sample;
    sample.question_id = qid;
    sample.image_id = "img_" + std::to_string(qid);
    sample.answers.reserve(spec.annotators);
    for (std::size_t j = 0; j < spec.annotators; ++j) {
      Annotation a;
      a.answer = corpus.vocabulary.entry(chosen[assignment[j]]);
      a.confidence = kConfidenceByDraw[rng.pick_weighted(spec.confidence_weights)];
      sample.answers.push_back(std::move(a));
    }

    const HumanDistribution hd = build_human_distribution(sample.answers, values);

    const double support_scale =
        1.0 - kOffSupportProb * static_cast<double>(spec.vocab_size - k);
    std::vector<double> logits(spec.vocab_size, spec.alpha * off_logit);
    for (std::size_t j = 0; j < hd.labels.size(); ++j) {
      const auto idx = corpus.vocabulary.find(hd.labels[j]);
      logits[*idx] = spec.alpha * std::log(hd.probs[j] * support_scale);
    }
    if (spec.sigma > 0.0) {
      for (double& l : logits) l += spec.sigma * rng.next_gaussian();
    }

    corpus.true_distributions.push_back(
        {qid, hd.labels, hd.probs, hd.hud_score});
    corpus.annotations.push_back(std::move(sample));
    corpus.predictions.push_back({qid, std::move(logits)});
  }
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw InputError("cannot create output directory " + dir.string());
  }
  const auto open = [](const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw InputError("cannot write " + p.string());
    return f;
  };
  {
    auto f = open(dir / "annotations.json");
    write_annotations(f, corpus.annotations);
  }
  {
    auto f = open(dir / "predictions.jsonl");
    write_predictions(f, corpus.predictions);
  }
  {
    auto f = open(dir / "vocabulary.txt");
    write_vocabulary(f, corpus.vocabulary);
  }
  {
    auto f = open(dir / "true_distributions.jsonl");
    for (const TrueDistribution& td : corpus.true_distributions) {
      nlohmann::ordered_json row;
      row["question_id"] = td.question_id;
      row["labels"] = td.labels;
      row["probs"] = td.probs;
      row["hud_score"] = td.hud_score;
      f << row.dump() << '\n';
    }
  }
}

MetricsTable brute_force_evaluate(const Corpus& corpus, double temperature,
                                  const EvalOptions& opts) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("temperature must be positive and finite");
  }

  struct Row {
    std::int64_t qid = 0;
    double hud = 0.0;
    std::vector<double> human;
    std::vector<double> model;
    double vqa = 0.0;
    double confidence = 0.0;
    int level = 0;
  };

  std::map<std::int64_t, const Prediction*> by_id;
  for (const Prediction& p : corpus.predictions) by_id[p.question_id] = &p;

  std::vector<Row> rows;
  for (const AnnotatedSample& s : corpus.annotations) {
    const auto found = by_id.find(s.question_id);
    if (found == by_id.end()) {
      throw std::runtime_error("no prediction for sample " +
                               std::to_string(s.question_id));
    }

    // Group answers by label in first-appearance order.
    std::vector<std::string> labels;
    std::vector<double> sums;
    std::vector<std::size_t> counts;
    for (const Annotation& a : s.answers) {
      double v = opts.confidence_values.no;
      if (a.confidence == Confidence::yes) v = opts.confidence_values.yes;
      if (a.confidence == Confidence::maybe) v = opts.confidence_values.maybe;
      std::size_t idx = labels.size();
      for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] == a.answer) {
          idx = j;
          break;
        }
      }
      if (idx == labels.size()) {
        labels.push_back(a.answer);
        sums.push_back(0.0);
        counts.push_back(0);
      }
      sums[idx] += v;
      counts[idx] += 1;
    }
    if (labels.size() < 2) continue;

    Row row;
    row.qid = s.question_id;
    double total = 0.0;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      row.human.push_back(sums[j] / static_cast<double>(counts[j]));
      total += row.human.back();
    }
    row.hud = total / static_cast<double>(labels.size());
    for (double& h : row.human) h /= total;

    // Softmax straight off the logits.
    const std::vector<double>& logits = found->second->logits;
    double denom = 0.0;
    for (const double l : logits) denom += std::exp(l / temperature);
    std::vector<double> probs(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) {
      probs[j] = std::exp(logits[j] / temperature) / denom;
    }

    std::size_t top = 0;
    for (std::size_t j = 1; j < probs.size(); ++j) {
      if (probs[j] > probs[top]) top = j;
    }
    row.confidence = probs[top];
    const std::string& predicted = corpus.vocabulary.entry(top);
    std::size_t hits = 0;
    for (const Annotation& a : s.answers) {
      if (a.answer == predicted) ++hits;
    }
    row.vqa = std::min(1.0, static_cast<double>(hits) / 3.0);

    for (const std::string& label : labels) {
      double q = 0.0;
      for (std::size_t j = 0; j < corpus.vocabulary.size(); ++j) {
        if (corpus.vocabulary.entry(j) == label) {
          q = probs[j];
          break;
        }
      }
      row.model.push_back(q);
    }
    if (opts.residual_bin) {
      double matched = 0.0;
      for (const double q : row.model) matched += q;
      row.human.push_back(0.0);
      row.model.push_back(std::max(0.0, 1.0 - matched));
    }
    rows.push_back(std::move(row));
  }

  if (rows.size() < 3) {
    throw std::runtime_error("too few multi-label samples to split");
  }

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.hud != b.hud) return a.hud > b.hud;
    return a.qid < b.qid;
  });
  const std::size_t n = rows.size();
  const auto n_low =
      static_cast<std::size_t>(std::ceil(static_cast<double>(n) / 3.0));
  const auto n_med = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n - n_low) / 2.0));
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].level = i < n_low ? 0 : (i < n_low + n_med ? 1 : 2);
  }

  struct Per {
    int level;
    double tvd, kl, ent, vqa, conf;
  };
  std::vector<Per> per;
  per.reserve(n);
  for (Row& row : rows) {
    double hsum = 0.0;
    double qsum = 0.0;
    for (double& h : row.human) {
      h = std::max(h, opts.floor);
      hsum += h;
    }
    for (double& q : row.model) {
      q = std::max(q, opts.floor);
      qsum += q;
    }
    for (double& h : row.human) h /= hsum;
    for (double& q : row.model) q /= qsum;

    double tv = 0.0;
    double d = 0.0;
    double h_human = 0.0;
    double h_model = 0.0;
    for (std::size_t j = 0; j < row.human.size(); ++j) {
      tv += std::fabs(row.human[j] - row.model[j]);
      d += row.human[j] * std::log(row.human[j] / row.model[j]);
      h_human -= row.human[j] * std::log(row.human[j]);
      h_model -= row.model[j] * std::log(row.model[j]);
    }
    per.push_back(
        {row.level, 0.5 * tv, d, std::fabs(h_model - h_human), row.vqa,
         row.confidence});
  }

  MetricsTable table;
  for (int set = 0; set < 4; ++set) {
    std::vector<const Per*> members;
    for (const Per& p : per) {
      if (set == 0 || p.level == set - 1) members.push_back(&p);
    }
    if (members.empty()) throw std::runtime_error("empty metric set");

    MetricsRow& r = table.rows[static_cast<std::size_t>(set)];
    r.sample_count = members.size();
    const auto m = static_cast<double>(members.size());
    double sv = 0.0, st = 0.0, sk = 0.0, se = 0.0;
    for (const Per* p : members) {
      sv += p->vqa;
      st += p->tvd;
      sk += p->kl;
      se += p->ent;
    }
    r.vqa_acc = sv / m;
    r.tvd = st / m;
    r.kl = sk / m;
    r.entce = se / m;

    const std::size_t bins = opts.ece_bins;
    std::vector<double> conf_sum(bins, 0.0);
    std::vector<double> acc_sum(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (const Per* p : members) {
      auto b = static_cast<std::size_t>(std::floor(p->conf * static_cast<double>(bins)));
      if (b >= bins) b = bins - 1;
      conf_sum[b] += p->conf;
      acc_sum[b] += p->vqa;
      count[b] += 1;
    }
    double e = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      if (count[b] == 0) continue;
      const auto c = static_cast<double>(count[b]);
      e += (c / m) * std::fabs(acc_sum[b] / c - conf_sum[b] / c);
    }
    r.ece = e;
  }
  return table;
}

}  // namespace hudcalib
