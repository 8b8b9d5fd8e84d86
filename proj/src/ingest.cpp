#include "hudcalib/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "json.hpp"

namespace hudcalib {

using json = nlohmann::ordered_json;

std::string_view to_string(Confidence c) {
  switch (c) {
    case Confidence::yes: return "yes";
    case Confidence::maybe: return "maybe";
    case Confidence::no: return "no";
  }
  throw std::invalid_argument("bad confidence enum value");
}

std::optional<Confidence> confidence_from_string(std::string_view s) {
  if (s == "yes") return Confidence::yes;
  if (s == "maybe") return Confidence::maybe;
  if (s == "no") return Confidence::no;
  return std::nullopt;
}

Vocabulary Vocabulary::from_entries(std::vector<std::string> entries) {
  Vocabulary v;
  v.entries_ = std::move(entries);
  v.index_.reserve(v.entries_.size());
  for (std::size_t i = 0; i < v.entries_.size(); ++i) {
    const std::string& e = v.entries_[i];
    if (e.empty()) {
      throw std::invalid_argument("vocabulary entries must be non-empty");
    }
    if (!v.index_.emplace(e, i).second) {
      throw std::invalid_argument("duplicate vocabulary entry '" + e + "'");
    }
  }
  return v;
}

std::optional<std::size_t> Vocabulary::find(std::string_view answer) const {
  const auto it = index_.find(answer);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string normalize_answer(std::string_view raw, NormalizationMode) {
  const auto is_space = [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (const unsigned char ch : raw) {
    if (is_space(ch)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a')
                                         : static_cast<char>(ch));
  }
  // Stripping trailing punctuation can expose a space ("x. ." ends as "x"),
  // so spaces strip together with the punctuation.
  const auto strippable = [](char c) {
    return c == '.' || c == ',' || c == '!' || c == '?' || c == ' ';
  };
  while (!out.empty() && strippable(out.back())) out.pop_back();
  return out;
}

namespace {

const json* get_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::string list_ids(const std::vector<std::int64_t>& ids) {
  std::string s;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(ids[i]);
  }
  if (ids.size() > shown) s += ", ...";
  return s;
}

}  // namespace

std::vector<AnnotatedSample> parse_annotations(std::istream& in,
                                               NormalizationMode mode) {
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(std::string("annotations: ") + e.what());
  }
  if (!root.is_array()) {
    throw InputError("annotations: top-level value must be an array");
  }

  std::vector<AnnotatedSample> out;
  out.reserve(root.size());
  std::unordered_set<std::int64_t> seen;
  seen.reserve(root.size());

  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& el = root[i];
    if (!el.is_object()) {
      throw InputError("annotations: element " + std::to_string(i) +
                       " must be an object");
    }
    const json* qid_field = get_field(el, "question_id");
    if (qid_field == nullptr || !qid_field->is_number_integer()) {
      throw InputError("annotations: element " + std::to_string(i) +
                       " needs an integer question_id");
    }
    const auto qid = qid_field->get<std::int64_t>();
    const std::string ctx = "annotations: sample " + std::to_string(qid);
    if (!seen.insert(qid).second) {
      throw InputError("annotations: duplicate question_id " +
                       std::to_string(qid));
    }

    AnnotatedSample s;
    s.question_id = qid;

    const json* img = get_field(el, "image_id");
    if (img == nullptr) throw InputError(ctx + ": missing image_id");
    if (img->is_string()) {
      s.image_id = img->get<std::string>();
    } else if (img->is_number_integer()) {
      s.image_id = std::to_string(img->get<std::int64_t>());
    } else {
      throw InputError(ctx + ": image_id must be a string");
    }

    if (const json* q = get_field(el, "question")) {
      if (!q->is_string()) throw InputError(ctx + ": question must be a string");
      s.question = q->get<std::string>();
    }

    const json* answers = get_field(el, "answers");
    if (answers == nullptr || !answers->is_array() || answers->empty()) {
      throw InputError(ctx + ": answers must be a non-empty array");
    }
    s.answers.reserve(answers->size());
    for (const json& a : *answers) {
      if (!a.is_object()) {
        throw InputError(ctx + ": answers entries must be objects");
      }
      const json* ans = get_field(a, "answer");
      if (ans == nullptr || !ans->is_string()) {
        throw InputError(ctx + ": answers entries need a string answer");
      }
      std::string norm = normalize_answer(ans->get_ref<const std::string&>(), mode);
      if (norm.empty()) {
        throw InputError(ctx + ": answer '" + ans->get_ref<const std::string&>() +
                         "' normalizes to an empty string");
      }
      const json* conf = get_field(a, "answer_confidence");
      if (conf == nullptr || !conf->is_string()) {
        throw InputError(ctx + ": answers entries need a string answer_confidence");
      }
      const auto c = confidence_from_string(conf->get_ref<const std::string&>());
      if (!c) {
        throw InputError(ctx + ": unknown answer_confidence '" +
                         conf->get_ref<const std::string&>() + "'");
      }
      s.answers.push_back({std::move(norm), *c});
    }
    out.push_back(std::move(s));
  }
  return out;
}

PredictionSet parse_predictions(std::istream& in, std::size_t expected_logits) {
  PredictionSet out;
  std::unordered_set<std::int64_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "predictions line " + std::to_string(lineno);

    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      if (line.find("NaN") != std::string::npos ||
          line.find("Infinity") != std::string::npos) {
        throw InputError(where + ": non-finite logits are not allowed");
      }
      throw InputError(where + ": " + e.what());
    }
    if (!row.is_object()) {
      throw InputError(where + ": each line must hold one object");
    }

    const json* qid_field = get_field(row, "question_id");
    if (qid_field == nullptr || !qid_field->is_number_integer()) {
      throw InputError(where + ": needs an integer question_id");
    }
    Prediction p;
    p.question_id = qid_field->get<std::int64_t>();
    if (!seen.insert(p.question_id).second) {
      throw InputError(where + ": duplicate question_id " +
                       std::to_string(p.question_id));
    }

    const json* logits = get_field(row, "logits");
    if (logits == nullptr || !logits->is_array()) {
      throw InputError(where + ": needs a logits array");
    }
    if (logits->size() != expected_logits) {
      throw InputError(where + ": sample " + std::to_string(p.question_id) +
                       " has " + std::to_string(logits->size()) +
                       " logits, expected " + std::to_string(expected_logits));
    }
    p.logits.reserve(logits->size());
    for (std::size_t i = 0; i < logits->size(); ++i) {
      const json& v = (*logits)[i];
      if (!v.is_number()) {
        throw InputError(where + ": logits must be numbers");
      }
      const double d = v.get<double>();
      if (!std::isfinite(d)) {
        throw InputError(where + ": logit " + std::to_string(i) +
                         " is not finite");
      }
      p.logits.push_back(d);
    }
    out.push_back(std::move(p));
  }
  return out;
}

Vocabulary parse_vocabulary(std::istream& in, NormalizationMode mode) {
  std::vector<std::string> entries;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string norm = normalize_answer(line, mode);
    if (norm.empty()) {
      throw InputError("vocabulary line " + std::to_string(lineno) +
                       " is empty");
    }
    const auto [it, fresh] = first_line.emplace(norm, lineno);
    if (!fresh) {
      throw InputError("vocabulary line " + std::to_string(lineno) +
                       ": duplicate entry '" + norm + "' (first on line " +
                       std::to_string(it->second) + ")");
    }
    entries.push_back(std::move(norm));
  }
  if (entries.empty()) throw InputError("vocabulary is empty");
  return Vocabulary::from_entries(std::move(entries));
}

namespace {

std::ifstream open_input(const std::filesystem::path& path, const char* kind) {
  std::ifstream f(path);
  if (!f) {
    throw InputError(std::string(kind) + " not found: " + path.string());
  }
  return f;
}

}  // namespace

std::vector<AnnotatedSample> load_annotations(const std::filesystem::path& path,
                                              NormalizationMode mode) {
  auto f = open_input(path, "annotations");
  return parse_annotations(f, mode);
}

PredictionSet load_predictions(const std::filesystem::path& path,
                               std::size_t expected_logits) {
  auto f = open_input(path, "predictions");
  return parse_predictions(f, expected_logits);
}

Vocabulary load_vocabulary(const std::filesystem::path& path,
                           NormalizationMode mode) {
  auto f = open_input(path, "vocabulary");
  return parse_vocabulary(f, mode);
}

void write_annotations(std::ostream& out,
                       std::span<const AnnotatedSample> samples) {
  json root = json::array();
  for (const AnnotatedSample& s : samples) {
    json el;
    el["question_id"] = s.question_id;
    el["image_id"] = s.image_id;
    if (!s.question.empty()) el["question"] = s.question;
    json answers = json::array();
    for (const Annotation& a : s.answers) {
      json entry;
      entry["answer"] = a.answer;
      entry["answer_confidence"] = std::string(to_string(a.confidence));
      answers.push_back(std::move(entry));
    }
    el["answers"] = std::move(answers);
    root.push_back(std::move(el));
  }
  out << root.dump(2) << '\n';
}

void write_predictions(std::ostream& out, const PredictionSet& predictions) {
  for (const Prediction& p : predictions) {
    json row;
    row["question_id"] = p.question_id;
    row["logits"] = p.logits;
    out << row.dump() << '\n';
  }
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (const std::string& e : vocab.entries()) out << e << '\n';
}

JoinResult join_samples(std::vector<AnnotatedSample> annotations,
                        PredictionSet predictions, JoinPolicy policy) {
  std::unordered_map<std::int64_t, std::size_t> pred_index;
  pred_index.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!pred_index.emplace(predictions[i].question_id, i).second) {
      throw InputError("join: duplicate question_id " +
                       std::to_string(predictions[i].question_id) +
                       " in predictions");
    }
  }

  std::unordered_set<std::int64_t> annotated;
  annotated.reserve(annotations.size());
  std::vector<std::int64_t> unpredicted;
  for (const AnnotatedSample& a : annotations) {
    if (!annotated.insert(a.question_id).second) {
      throw InputError("join: duplicate question_id " +
                       std::to_string(a.question_id) + " in annotations");
    }
    if (pred_index.find(a.question_id) == pred_index.end()) {
      unpredicted.push_back(a.question_id);
    }
  }
  std::vector<std::int64_t> unannotated;
  for (const Prediction& p : predictions) {
    if (annotated.find(p.question_id) == annotated.end()) {
      unannotated.push_back(p.question_id);
    }
  }
  std::sort(unpredicted.begin(), unpredicted.end());
  std::sort(unannotated.begin(), unannotated.end());

  if (policy == JoinPolicy::strict) {
    if (!unpredicted.empty()) {
      throw InputError("join: " + std::to_string(unpredicted.size()) +
                       " annotated samples have no prediction (question_id " +
                       list_ids(unpredicted) + ")");
    }
    if (!unannotated.empty()) {
      throw InputError("join: " + std::to_string(unannotated.size()) +
                       " predictions have no annotation (question_id " +
                       list_ids(unannotated) + ")");
    }
  }

  JoinResult result;
  result.annotations_without_prediction = unpredicted.size();
  result.predictions_without_annotation = unannotated.size();
  result.samples.reserve(annotations.size());
  for (AnnotatedSample& a : annotations) {
    const auto it = pred_index.find(a.question_id);
    if (it == pred_index.end()) continue;
    EvalSample s;
    s.question_id = a.question_id;
    s.image_id = std::move(a.image_id);
    s.question = std::move(a.question);
    s.answers = std::move(a.answers);
    s.logits = std::move(predictions[it->second].logits);
    result.samples.push_back(std::move(s));
  }
  std::sort(result.samples.begin(), result.samples.end(),
            [](const EvalSample& x, const EvalSample& y) {
              return x.question_id < y.question_id;
            });
  return result;
}

}  // namespace hudcalib
