#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hudcalib/types.hpp"

namespace hudcalib {

// Answer-string normalization applied to every annotation answer and every
// vocabulary entry before any matching. "minimal" is ASCII lowercasing,
// whitespace collapsing, and stripping of trailing '.', ',', '!', '?' runs;
// bytes outside ASCII pass through untouched. The function is idempotent.
enum class NormalizationMode { minimal };

std::string normalize_answer(std::string_view raw,
                             NormalizationMode mode = NormalizationMode::minimal);

// Annotations arrive as one JSON array of objects:
//   {"question_id": 42, "image_id": "...", "question": "...",
//    "answers": [{"answer": "yes", "answer_confidence": "maybe"}, ...]}
// "question" is optional. Answers are normalized on the way in. Duplicate
// question_ids, empty answer lists, unknown confidence strings, and empty
// normalized answers are all rejected with the offending sample named.
std::vector<AnnotatedSample> parse_annotations(
    std::istream& in, NormalizationMode mode = NormalizationMode::minimal);

// Predictions arrive as JSONL, one object per line:
//   {"question_id": 42, "logits": [ ... ]}
// Every row must carry exactly `expected_logits` finite values. Blank lines
// are skipped; errors name the line.
PredictionSet parse_predictions(std::istream& in, std::size_t expected_logits);

// Vocabulary is plain text, one entry per line, mapped to logit indices in
// file order. Entries are normalized; lines that are empty (before or after
// normalization) and entries that collide after normalization are rejected.
Vocabulary parse_vocabulary(std::istream& in,
                            NormalizationMode mode = NormalizationMode::minimal);

// File loaders; missing files are reported as "<kind> not found: <path>".
std::vector<AnnotatedSample> load_annotations(
    const std::filesystem::path& path,
    NormalizationMode mode = NormalizationMode::minimal);
PredictionSet load_predictions(const std::filesystem::path& path,
                               std::size_t expected_logits);
Vocabulary load_vocabulary(const std::filesystem::path& path,
                           NormalizationMode mode = NormalizationMode::minimal);

// Writers round-trip exactly: parsing what they emit reproduces the input
// values, and equal inputs serialize to identical bytes.
void write_annotations(std::ostream& out, std::span<const AnnotatedSample> samples);
void write_predictions(std::ostream& out, const PredictionSet& predictions);
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);

// How to reconcile the annotated question set with the predicted one.
// strict: the two sets must be identical. intersect: evaluate the overlap
// and count what fell away on each side.
enum class JoinPolicy { strict, intersect };

struct JoinResult {
  std::vector<EvalSample> samples;  // ascending question_id
  std::size_t annotations_without_prediction = 0;
  std::size_t predictions_without_annotation = 0;
};

JoinResult join_samples(std::vector<AnnotatedSample> annotations,
                        PredictionSet predictions, JoinPolicy policy);

}  // namespace hudcalib
