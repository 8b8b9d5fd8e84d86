#include "hudcalib/report.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "hudcalib/util.hpp"
#include "json.hpp"

namespace hudcalib {

namespace {

constexpr std::string_view kMetricsHeader =
    "set,samples,vqa_accuracy,tvd,kl,entce,ece";
constexpr std::array<std::string_view, 5> kMetricNames = {
    "vqa_accuracy", "tvd", "kl", "entce", "ece"};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t c = line.find(',', pos);
    if (c == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, c - pos));
    pos = c + 1;
  }
  return out;
}

double parse_double_field(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InputError("metrics csv: bad number '" + s + "'");
  }
  return v;
}

std::size_t parse_count_field(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InputError("metrics csv: bad sample count '" + s + "'");
  }
  return v;
}

void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::string metrics_csv(const MetricsTable& table) {
  std::string s{kMetricsHeader};
  s += '\n';
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const MetricsRow& r = table.rows[k];
    s += to_string(static_cast<SetId>(k));
    s += ',';
    s += std::to_string(r.sample_count);
    for (const double v : {r.vqa_acc, r.tvd, r.kl, r.entce, r.ece}) {
      s += ',';
      s += format_sig(v, 6);
    }
    s += '\n';
  }
  return s;
}

std::string metrics_markdown(const MetricsTable& table) {
  std::string s = "| Set | Samples | VQA accuracy | TVD | KL | EntCE | ECE |\n";
  s += "|:--|--:|--:|--:|--:|--:|--:|\n";
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const MetricsRow& r = table.rows[k];
    s += "| ";
    s += to_string(static_cast<SetId>(k));
    s += " | ";
    s += std::to_string(r.sample_count);
    for (const double v : {r.vqa_acc, r.tvd, r.kl, r.entce, r.ece}) {
      s += " | ";
      s += format_sig(v, 6);
    }
    s += " |\n";
  }
  return s;
}

MetricsTable parse_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("metrics csv: empty input");
  chomp(line);
  if (line != kMetricsHeader) {
    throw InputError("metrics csv: unexpected header '" + line + "'");
  }

  MetricsTable table;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    if (!std::getline(in, line)) {
      throw InputError("metrics csv: expected 4 data rows, got " +
                       std::to_string(k));
    }
    chomp(line);
    const auto fields = split_fields(line);
    if (fields.size() != 7) {
      throw InputError("metrics csv: expected 7 fields, got " +
                       std::to_string(fields.size()));
    }
    if (fields[0] != to_string(static_cast<SetId>(k))) {
      throw InputError("metrics csv: expected set '" +
                       std::string(to_string(static_cast<SetId>(k))) +
                       "', got '" + fields[0] + "'");
    }
    MetricsRow& r = table.rows[k];
    r.sample_count = parse_count_field(fields[1]);
    r.vqa_acc = parse_double_field(fields[2]);
    r.tvd = parse_double_field(fields[3]);
    r.kl = parse_double_field(fields[4]);
    r.entce = parse_double_field(fields[5]);
    r.ece = parse_double_field(fields[6]);
  }
  while (std::getline(in, line)) {
    chomp(line);
    if (!line.empty()) throw InputError("metrics csv: trailing data");
  }
  return table;
}

std::string split_manifest_csv(const SplitAssignment& split) {
  std::string s = "question_id,hud_score,level\n";
  for (const SplitAssignment::Row& row : split.rows) {
    s += std::to_string(row.question_id);
    s += ',';
    s += format_sig(row.hud_score, 6);
    s += ',';
    s += to_string(row.level);
    s += '\n';
  }
  return s;
}

std::string hud_stats_csv(const HudStats& stats) {
  std::string s = "set,samples,mean_labels,mean_hud,std_hud,min_hud,max_hud\n";
  for (const SetStats& st : stats.sets) {
    s += st.set;
    s += ',';
    s += std::to_string(st.count);
    for (const double v :
         {st.mean_labels, st.mean_hud, st.std_hud, st.min_hud, st.max_hud}) {
      s += ',';
      s += format_sig(v, 6);
    }
    s += '\n';
  }
  return s;
}

std::string hud_histogram_csv(const HudStats& stats) {
  std::string s = "bin_start,bin_end,count\n";
  const auto bins = static_cast<double>(stats.histogram.size());
  for (std::size_t i = 0; i < stats.histogram.size(); ++i) {
    s += format_sig(static_cast<double>(i) / bins, 6);
    s += ',';
    s += format_sig(static_cast<double>(i + 1) / bins, 6);
    s += ',';
    s += std::to_string(stats.histogram[i]);
    s += '\n';
  }
  return s;
}

void per_sample_jsonl(std::ostream& out,
                      std::span<const PerSampleMetrics> samples) {
  for (const PerSampleMetrics& s : samples) {
    nlohmann::ordered_json row;
    row["question_id"] = s.question_id;
    row["set"] = std::string(to_string(s.level));
    row["hud_score"] = s.hud_score;
    row["support"] = s.support;
    row["human"] = s.human;
    row["model"] = s.model;
    row["tvd"] = s.tvd;
    row["kl"] = s.kl;
    row["entce_signed"] = s.entce_signed;
    row["vqa_acc"] = s.vqa_acc;
    row["confidence"] = s.confidence;
    row["unmatched"] = s.unmatched;
    out << row.dump() << '\n';
  }
}

std::string fit_json(const TemperatureFit& fit) {
  nlohmann::ordered_json j;
  j["temperature"] = fit.temperature;
  j["objective"] = std::string(to_string(fit.objective));
  j["grid"] = fit.grid;
  j["scores"] = fit.scores;
  j["best_score"] = fit.best_score;
  j["saturated"] = fit.saturated;
  return j.dump(2) + "\n";
}

std::string comparison_markdown(const ComparisonTable& table,
                                double temperature, Objective objective) {
  std::string s = "# Calibration comparison\n\n";
  s += "Fitted temperature: ";
  s += format_sig(temperature, 6);
  s += " (objective: ";
  s += to_string(objective);
  s += ")\n\n";
  s += "| Set | Samples | Metric | Before | After | Change |\n";
  s += "|:--|--:|:--|--:|--:|:--|\n";
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const ComparisonRow& row = table.rows[k];
    for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
      const ComparisonCell& cell = row.cells[m];
      s += "| ";
      s += to_string(static_cast<SetId>(k));
      s += " | ";
      s += std::to_string(row.sample_count);
      s += " | ";
      s += kMetricNames[m];
      s += " | ";
      s += format_sig(cell.before, 6);
      s += " | ";
      s += format_sig(cell.after, 6);
      s += " | ";
      switch (cell.direction) {
        case Direction::improved: s += "improved"; break;
        case Direction::worsened: s += "worsened (-)"; break;
        case Direction::unchanged: s += "unchanged"; break;
      }
      s += " |\n";
    }
  }
  return s;
}

std::string case_study_json(const EvalSample& sample,
                            const HumanDistribution& human,
                            const AlignedPair& uncalibrated,
                            const AlignedPair& calibrated, double temperature) {
  if (uncalibrated.support != calibrated.support) {
    throw std::invalid_argument("case study: aligned supports differ");
  }
  nlohmann::ordered_json j;
  j["question_id"] = sample.question_id;
  j["image_id"] = sample.image_id;
  if (!sample.question.empty()) j["question"] = sample.question;
  j["hud_score"] = human.hud_score;
  j["temperature"] = temperature;

  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < uncalibrated.support.size(); ++i) {
    const std::string& label = uncalibrated.support[i];
    nlohmann::ordered_json r;
    r["label"] = label;
    r["vqa_acc_if_predicted"] = vqa_accuracy(sample.answers, label);
    r["human_mean_confidence"] =
        i < human.mean_confidence.size() ? human.mean_confidence[i] : 0.0;
    r["human_prob"] = uncalibrated.human[i];
    r["model_prob_uncalibrated"] = uncalibrated.model[i];
    r["model_prob_at_T"] = calibrated.model[i];
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace hudcalib
