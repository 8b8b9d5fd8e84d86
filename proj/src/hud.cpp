#include "hudcalib/hud.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hudcalib/util.hpp"

namespace hudcalib {

HumanDistribution build_human_distribution(std::span<const Annotation> answers,
                                           const ConfidenceValues& values) {
  if (answers.empty()) {
    throw std::invalid_argument("cannot build a distribution from zero answers");
  }
  HumanDistribution hd;
  std::vector<std::size_t> counts;
  for (const Annotation& a : answers) {
    // Samples carry a handful of answers, a linear label scan beats a map.
    std::size_t idx = hd.labels.size();
    for (std::size_t i = 0; i < hd.labels.size(); ++i) {
      if (hd.labels[i] == a.answer) {
        idx = i;
        break;
      }
    }
    if (idx == hd.labels.size()) {
      hd.labels.push_back(a.answer);
      hd.mean_confidence.push_back(0.0);
      counts.push_back(0);
    }
    hd.mean_confidence[idx] += values.value_of(a.confidence);
    counts[idx] += 1;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < hd.labels.size(); ++i) {
    hd.mean_confidence[i] /= static_cast<double>(counts[i]);
    total += hd.mean_confidence[i];
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("confidence values must be positive");
  }
  hd.hud_score = total / static_cast<double>(hd.labels.size());
  hd.probs.resize(hd.labels.size());
  for (std::size_t i = 0; i < hd.labels.size(); ++i) {
    hd.probs[i] = hd.mean_confidence[i] / total;
  }
  return hd;
}

std::vector<ScoredSample> score_samples(std::vector<EvalSample> samples,
                                        const ConfidenceValues& values) {
  std::vector<ScoredSample> out;
  out.reserve(samples.size());
  for (EvalSample& s : samples) {
    HumanDistribution hd = build_human_distribution(s.answers, values);
    out.push_back({std::move(s), std::move(hd)});
  }
  return out;
}

FilterResult filter_single_label(std::vector<ScoredSample> samples) {
  FilterResult r;
  r.retained.reserve(samples.size());
  for (ScoredSample& s : samples) {
    if (s.human.labels.size() >= 2) {
      r.retained.push_back(std::move(s));
    } else {
      ++r.removed_single_label;
    }
  }
  return r;
}

std::string_view to_string(Level level) {
  switch (level) {
    case Level::low: return "Low";
    case Level::medium: return "Medium";
    case Level::high: return "High";
  }
  throw std::invalid_argument("bad level enum value");
}

Level SplitAssignment::level_of(std::int64_t question_id) const {
  const auto it = by_id.find(question_id);
  if (it == by_id.end()) {
    throw std::invalid_argument("question_id " + std::to_string(question_id) +
                                " is not in the split");
  }
  return it->second;
}

SplitAssignment split_terciles(std::span<const ScoredSample> samples) {
  const std::size_t n = samples.size();
  if (n < 3) {
    throw InputError("tercile split needs at least 3 samples, got " +
                     std::to_string(n));
  }

  SplitAssignment split;
  split.rows.reserve(n);
  for (const ScoredSample& s : samples) {
    split.rows.push_back({s.sample.question_id, s.human.hud_score, Level::low});
  }
  std::sort(split.rows.begin(), split.rows.end(),
            [](const SplitAssignment::Row& a, const SplitAssignment::Row& b) {
              if (a.hud_score != b.hud_score) return a.hud_score > b.hud_score;
              return a.question_id < b.question_id;
            });

  const std::size_t n_low = (n + 2) / 3;
  const std::size_t n_med = (n - n_low + 1) / 2;
  split.sizes = {n_low, n_med, n - n_low - n_med};

  split.by_id.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Level level = Level::high;
    if (i < n_low) {
      level = Level::low;
    } else if (i < n_low + n_med) {
      level = Level::medium;
    }
    split.rows[i].level = level;
    if (!split.by_id.emplace(split.rows[i].question_id, level).second) {
      throw std::invalid_argument("duplicate question_id " +
                                  std::to_string(split.rows[i].question_id) +
                                  " in tercile split");
    }
  }
  return split;
}

HudStats hud_statistics(std::span<const ScoredSample> samples,
                        const SplitAssignment& split,
                        std::size_t histogram_bins) {
  if (histogram_bins == 0) {
    throw std::invalid_argument("histogram needs at least one bin");
  }

  // Index 0 aggregates everything; 1..3 follow Level.
  std::array<std::vector<double>, 4> hud;
  std::array<std::vector<double>, 4> labels;
  HudStats stats;
  stats.histogram.assign(histogram_bins, 0);

  for (const ScoredSample& s : samples) {
    const auto set = 1 + static_cast<std::size_t>(split.level_of(s.sample.question_id));
    const double score = s.human.hud_score;
    const auto label_count = static_cast<double>(s.human.labels.size());
    for (const std::size_t k : {std::size_t{0}, set}) {
      hud[k].push_back(score);
      labels[k].push_back(label_count);
    }
    stats.histogram[uniform_bin(score, histogram_bins)] += 1;
  }

  static constexpr std::array<std::string_view, 4> kNames = {"All", "Low",
                                                             "Medium", "High"};
  for (std::size_t k = 0; k < 4; ++k) {
    SetStats& st = stats.sets[k];
    st.set = kNames[k];
    st.count = hud[k].size();
    if (st.count == 0) continue;
    st.mean_labels = mean(labels[k]);
    st.mean_hud = mean(hud[k]);
    std::vector<double> sq;
    sq.reserve(st.count);
    for (const double x : hud[k]) sq.push_back((x - st.mean_hud) * (x - st.mean_hud));
    st.std_hud = std::sqrt(mean(sq));
    const auto [lo, hi] = std::minmax_element(hud[k].begin(), hud[k].end());
    st.min_hud = *lo;
    st.max_hud = *hi;
  }
  return stats;
}

}  // namespace hudcalib
