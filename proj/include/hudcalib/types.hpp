#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hudcalib {

// Raised for malformed inputs and bad usage (file contents, CLI arguments,
// inconsistent corpora). The CLI maps it to exit code 2; everything else is
// treated as an internal failure.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Confidence { yes, maybe, no };

std::string_view to_string(Confidence c);
std::optional<Confidence> confidence_from_string(std::string_view s);

// Numeric weight of each self-reported confidence level.
struct ConfidenceValues {
  double yes = 1.0;
  double maybe = 0.5;
  double no = 0.01;

  double value_of(Confidence c) const {
    switch (c) {
      case Confidence::yes: return yes;
      case Confidence::maybe: return maybe;
      case Confidence::no: return no;
    }
    throw std::invalid_argument("bad confidence enum value");
  }
};

struct Annotation {
  std::string answer;
  Confidence confidence = Confidence::yes;
};

struct AnnotatedSample {
  std::int64_t question_id = 0;
  std::string image_id;
  std::string question;
  std::vector<Annotation> answers;
};

struct Prediction {
  std::int64_t question_id = 0;
  std::vector<double> logits;
};

using PredictionSet = std::vector<Prediction>;

// Model answer vocabulary; entry i names the class behind logit i. Entries
// are stored normalized and must be unique and non-empty.
class Vocabulary {
 public:
  Vocabulary() = default;
  static Vocabulary from_entries(std::vector<std::string> entries);

  std::size_t size() const { return entries_.size(); }
  const std::string& entry(std::size_t i) const { return entries_.at(i); }
  const std::vector<std::string>& entries() const { return entries_; }
  std::optional<std::size_t> find(std::string_view answer) const;

 private:
  struct TransparentHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::vector<std::string> entries_;
  std::unordered_map<std::string, std::size_t, TransparentHash, std::equal_to<>>
      index_;
};

// One annotated question joined with the model's logits for it.
struct EvalSample {
  std::int64_t question_id = 0;
  std::string image_id;
  std::string question;
  std::vector<Annotation> answers;
  std::vector<double> logits;
};

}  // namespace hudcalib
