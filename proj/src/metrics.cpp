#include "hudcalib/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hudcalib/kernels.hpp"
#include "hudcalib/util.hpp"

namespace hudcalib {

namespace {

void check_probs(std::span<const double> p, const char* who) {
  for (const double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument(std::string(who) +
                                  ": probabilities must be finite and non-negative");
    }
  }
}

void check_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("temperature must be positive and finite");
  }
}

void floor_and_renormalize(std::vector<double>& v, double floor) {
  double total = 0.0;
  for (double& x : v) {
    x = std::max(x, floor);
    total += x;
  }
  const double inv = 1.0 / total;
  for (double& x : v) x *= inv;
}

}  // namespace

double entropy(std::span<const double> p) {
  check_probs(p, "entropy");
  double h = 0.0;
  for (const double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

double tvd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("tvd: distributions differ in length");
  }
  check_probs(p, "tvd");
  check_probs(q, "tvd");
  return kernels::active().half_abs_diff_sum(p.data(), q.data(), p.size());
}

double kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("kl: distributions differ in length");
  }
  check_probs(p, "kl");
  check_probs(q, "kl");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0) {
      throw std::invalid_argument(
          "kl: zero probability under positive reference mass");
    }
    d += p[i] * std::log(p[i] / q[i]);
  }
  return d;
}

double vqa_accuracy(std::span<const Annotation> answers,
                    std::string_view predicted) {
  std::size_t hits = 0;
  for (const Annotation& a : answers) {
    if (a.answer == predicted) ++hits;
  }
  return std::min(1.0, static_cast<double>(hits) / 3.0);
}

double ece(std::span<const ConfAcc> points, std::size_t bins) {
  if (points.empty()) {
    throw std::invalid_argument("ece: no points to bin");
  }
  if (bins == 0) {
    throw std::invalid_argument("ece: needs at least one bin");
  }
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<double> acc_sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (const ConfAcc& pt : points) {
    if (!(pt.confidence >= 0.0 && pt.confidence <= 1.0)) {
      throw std::invalid_argument("ece: confidence outside [0, 1]");
    }
    const std::size_t b = uniform_bin(pt.confidence, bins);
    conf_sum[b] += pt.confidence;
    acc_sum[b] += pt.accuracy;
    count[b] += 1;
  }
  double e = 0.0;
  const auto n = static_cast<double>(points.size());
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const auto c = static_cast<double>(count[b]);
    e += (c / n) * std::fabs(acc_sum[b] / c - conf_sum[b] / c);
  }
  return e;
}

std::string_view to_string(SetId set) {
  switch (set) {
    case SetId::all: return "All";
    case SetId::low: return "Low";
    case SetId::medium: return "Medium";
    case SetId::high: return "High";
  }
  throw std::invalid_argument("bad set enum value");
}

AlignedPair align_support(const HumanDistribution& human,
                          std::span<const double> model_probs,
                          const Vocabulary& vocab, double floor,
                          bool residual_bin) {
  if (!(floor > 0.0) || !std::isfinite(floor)) {
    throw std::invalid_argument("align: floor must be positive");
  }
  if (model_probs.size() != vocab.size()) {
    throw std::invalid_argument(
        "align: model probabilities must cover the vocabulary");
  }
  if (human.labels.empty()) {
    throw std::invalid_argument("align: empty human support");
  }

  AlignedPair out;
  const std::size_t k = human.labels.size();
  out.support.reserve(k + (residual_bin ? 1 : 0));
  out.human.reserve(k + (residual_bin ? 1 : 0));
  out.model.reserve(k + (residual_bin ? 1 : 0));
  double matched = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    out.support.push_back(human.labels[i]);
    out.human.push_back(human.probs[i]);
    if (const auto idx = vocab.find(human.labels[i])) {
      out.model.push_back(model_probs[*idx]);
      matched += model_probs[*idx];
    } else {
      out.model.push_back(0.0);
      out.unmatched.push_back(human.labels[i]);
    }
  }
  if (residual_bin) {
    out.support.push_back("<residual>");
    out.human.push_back(0.0);
    out.model.push_back(std::max(0.0, 1.0 - matched));
  }
  floor_and_renormalize(out.human, floor);
  floor_and_renormalize(out.model, floor);
  return out;
}

PreparedCorpus PreparedCorpus::build(std::vector<ScoredSample> samples,
                                     const SplitAssignment& split,
                                     const Vocabulary& vocab,
                                     const EvalOptions& opts) {
  if (!(opts.floor > 0.0) || !std::isfinite(opts.floor)) {
    throw std::invalid_argument("floor must be positive");
  }
  if (opts.ece_bins == 0) {
    throw std::invalid_argument("ece needs at least one bin");
  }
  if (samples.empty()) {
    throw std::invalid_argument("cannot prepare an empty corpus");
  }
  if (vocab.size() == 0) {
    throw std::invalid_argument("cannot prepare against an empty vocabulary");
  }

  const auto& ops = kernels::active();
  PreparedCorpus pc;
  pc.opts_ = opts;
  pc.samples_.reserve(samples.size());
  for (ScoredSample& ss : samples) {
    if (ss.sample.logits.size() != vocab.size()) {
      throw std::invalid_argument(
          "sample " + std::to_string(ss.sample.question_id) +
          " logits do not cover the vocabulary");
    }
    PreparedSample p;
    p.question_id = ss.sample.question_id;
    p.level = split.level_of(p.question_id);
    p.hud_score = ss.human.hud_score;
    p.logits = std::move(ss.sample.logits);
    p.max_logit = ops.reduce_max(p.logits.data(), p.logits.size());
    const std::size_t top = ops.argmax(p.logits.data(), p.logits.size());
    p.vqa_acc = vqa_accuracy(ss.sample.answers, vocab.entry(top));

    const std::size_t k = ss.human.labels.size();
    const std::size_t m = k + (opts.residual_bin ? 1 : 0);
    p.support_index.reserve(k);
    p.support.reserve(m);
    p.human.reserve(m);
    for (std::size_t i = 0; i < k; ++i) {
      const auto idx = vocab.find(ss.human.labels[i]);
      p.support_index.push_back(
          idx ? static_cast<std::ptrdiff_t>(*idx) : std::ptrdiff_t{-1});
      p.support.push_back(std::move(ss.human.labels[i]));
      p.human.push_back(ss.human.probs[i]);
      if (!idx) p.unmatched.push_back(p.support.back());
    }
    if (opts.residual_bin) {
      p.support.emplace_back("<residual>");
      p.human.push_back(0.0);
    }
    floor_and_renormalize(p.human, opts.floor);
    p.human_entropy = entropy(p.human);
    pc.samples_.push_back(std::move(p));
  }
  std::sort(pc.samples_.begin(), pc.samples_.end(),
            [](const PreparedSample& a, const PreparedSample& b) {
              return a.question_id < b.question_id;
            });
  return pc;
}

PreparedCorpus::SampleResult PreparedCorpus::compute_sample(
    const PreparedSample& s, double inv_t, std::vector<double>& model) const {
  const auto& ops = kernels::active();
  const double denom =
      ops.exp_sum(s.logits.data(), s.logits.size(), s.max_logit, inv_t);

  const std::size_t k = s.support_index.size();
  const std::size_t m = s.human.size();
  model.assign(m, 0.0);
  double matched = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (s.support_index[j] >= 0) {
      const auto idx = static_cast<std::size_t>(s.support_index[j]);
      model[j] = std::exp((s.logits[idx] - s.max_logit) * inv_t) / denom;
      matched += model[j];
    }
  }
  if (m > k) model[k] = std::max(0.0, 1.0 - matched);
  floor_and_renormalize(model, opts_.floor);

  SampleResult r;
  r.confidence = 1.0 / denom;  // the max logit contributes exp(0)
  r.tvd = ops.half_abs_diff_sum(s.human.data(), model.data(), m);
  double d = 0.0;
  double model_entropy = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    d += s.human[j] * std::log(s.human[j] / model[j]);
    model_entropy -= model[j] * std::log(model[j]);
  }
  r.kl = d;
  r.entce_signed = model_entropy - s.human_entropy;
  return r;
}

MetricsTable PreparedCorpus::aggregate(
    std::span<const SampleResult> results) const {
  std::array<std::vector<double>, 4> vqa;
  std::array<std::vector<double>, 4> tvd_v;
  std::array<std::vector<double>, 4> kl_v;
  std::array<std::vector<double>, 4> ent_v;
  std::array<std::vector<ConfAcc>, 4> points;

  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const PreparedSample& s = samples_[i];
    const auto set = 1 + static_cast<std::size_t>(s.level);
    for (const std::size_t k : {std::size_t{0}, set}) {
      vqa[k].push_back(s.vqa_acc);
      tvd_v[k].push_back(results[i].tvd);
      kl_v[k].push_back(results[i].kl);
      ent_v[k].push_back(std::fabs(results[i].entce_signed));
      points[k].push_back({results[i].confidence, s.vqa_acc});
    }
  }

  MetricsTable table;
  for (std::size_t k = 0; k < 4; ++k) {
    MetricsRow& row = table.rows[k];
    row.sample_count = vqa[k].size();
    if (row.sample_count == 0) {
      throw std::invalid_argument(
          "no samples in set " +
          std::string(to_string(static_cast<SetId>(k))));
    }
    row.vqa_acc = mean(vqa[k]);
    row.tvd = mean(tvd_v[k]);
    row.kl = mean(kl_v[k]);
    row.entce = mean(ent_v[k]);
    row.ece = ece(points[k], opts_.ece_bins);
  }
  return table;
}

MetricsTable PreparedCorpus::evaluate(double temperature) const {
  check_temperature(temperature);
  const double inv_t = 1.0 / temperature;
  std::vector<SampleResult> results(samples_.size());
  parallel_for(samples_.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> scratch;
    for (std::size_t i = begin; i < end; ++i) {
      results[i] = compute_sample(samples_[i], inv_t, scratch);
    }
  });
  return aggregate(results);
}

std::pair<MetricsTable, std::vector<PerSampleMetrics>>
PreparedCorpus::evaluate_detailed(double temperature) const {
  check_temperature(temperature);
  const double inv_t = 1.0 / temperature;
  std::vector<SampleResult> results(samples_.size());
  std::vector<PerSampleMetrics> detail(samples_.size());
  parallel_for(samples_.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> scratch;
    for (std::size_t i = begin; i < end; ++i) {
      const PreparedSample& s = samples_[i];
      results[i] = compute_sample(s, inv_t, scratch);
      PerSampleMetrics& d = detail[i];
      d.question_id = s.question_id;
      d.level = s.level;
      d.hud_score = s.hud_score;
      d.support = s.support;
      d.human = s.human;
      d.model = scratch;
      d.unmatched = s.unmatched;
      d.tvd = results[i].tvd;
      d.kl = results[i].kl;
      d.entce_signed = results[i].entce_signed;
      d.vqa_acc = s.vqa_acc;
      d.confidence = results[i].confidence;
    }
  });
  return {aggregate(results), std::move(detail)};
}

Evaluation evaluate(std::vector<EvalSample> samples, const Vocabulary& vocab,
                    double temperature, const EvalOptions& opts,
                    std::size_t histogram_bins) {
  auto scored = score_samples(std::move(samples), opts.confidence_values);
  auto filtered = filter_single_label(std::move(scored));

  Evaluation ev;
  ev.removed_single_label = filtered.removed_single_label;
  ev.split = split_terciles(filtered.retained);
  ev.hud = hud_statistics(filtered.retained, ev.split, histogram_bins);

  const auto prepared =
      PreparedCorpus::build(std::move(filtered.retained), ev.split, vocab, opts);
  auto [table, detail] = prepared.evaluate_detailed(temperature);
  ev.metrics = table;
  ev.per_sample = std::move(detail);
  return ev;
}

}  // namespace hudcalib
