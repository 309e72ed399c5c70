#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xconsist/errors.hpp"
#include "xconsist/model.hpp"

namespace xconsist::congen {

// ---------------------------------------------------------------------------
// Text normalization

struct Token {
  std::string norm;   // lowercased, inflection-reduced
  std::size_t begin;  // character offsets into the source text
  std::size_t end;
};

// Lowercase, split on anything that is not a letter, digit or apostrophe,
// drop stopwords, and reduce each word with lemmatize().
std::vector<Token> normalize(std::string_view text);
std::vector<std::string> normalized_words(std::string_view text);
std::string normalized_key(std::string_view text);  // words joined by ' '

// Rule-based inflection reduction: exception table first, then plural and
// verb suffix rules.
std::string lemmatize(std::string_view lowercase_word);
bool is_stopword(std::string_view lowercase_word);
// Answers that never make a pivot concept (yes/no and similar).
bool is_excluded_answer(std::string_view answer);

// ---------------------------------------------------------------------------
// Corpora

struct Caption {
  std::string image_id;
  std::string text;
};

struct QaPair {
  std::string image_id;
  std::string question;
  std::string answer;
};

struct ObjectBox {
  std::string image_id;
  std::string label;  // object class
  Box box;
};

std::vector<Caption> read_captions(const std::filesystem::path& path);
std::vector<QaPair> read_qa(const std::filesystem::path& path);
std::vector<ObjectBox> read_boxes(const std::filesystem::path& path);

// query -> score, loaded from a two-column TSV (query<TAB>score, no header).
class ScorerTable {
 public:
  ScorerTable() = default;
  explicit ScorerTable(std::map<std::string, double> scores) : scores_(std::move(scores)) {}

  static ScorerTable read(const std::filesystem::path& path);

  std::optional<double> find(const std::string& query) const;
  bool empty() const { return scores_.empty(); }
  std::size_t size() const { return scores_.size(); }
  const std::map<std::string, double>& entries() const { return scores_; }

 private:
  std::map<std::string, double> scores_;
};

// Answer-proposal tables key each candidate as "<image_id> || <question> || <answer>";
// proposals are image-conditioned, so the same question on two images has
// independent candidates.
inline constexpr std::string_view kAnswerSeparator = " || ";
std::string answer_query(std::string_view image_id, std::string_view question,
                         std::string_view answer);

// Raised when a scorer table lacks entries the pipeline needs. Lists every
// missing query so they can all be scored in one pass.
class MissingScoresError : public ValidationError {
 public:
  MissingScoresError(std::string table, std::vector<std::string> queries);
  const std::string& table() const { return table_; }
  const std::vector<std::string>& queries() const { return queries_; }

 private:
  std::string table_;
  std::vector<std::string> queries_;
};

// ---------------------------------------------------------------------------
// Step 1: pivots

struct OverlapMatch {
  std::size_t caption_index = 0;
  std::size_t qa_index = 0;
  std::vector<std::string> concept_words;  // normalized words
  Span caption_span;
  Span answer_span;
};

// A caption and a QA pair on the same image match when the answer's full
// normalized word sequence occurs contiguously in the caption's normalized
// words. First occurrence wins. Output is ordered by (caption_index, qa_index).
std::vector<OverlapMatch> find_pivots(const std::vector<Caption>& captions,
                                      const std::vector<QaPair>& qa_pairs);

// ---------------------------------------------------------------------------
// Step 2: candidate answers

// Candidates for (image_id, question) in `answer_table`, by descending score
// (ties by answer text); drops the gold concept, normalized duplicates, answers
// with no content words and any answer listed as equivalent to the gold.
// Throws MissingScoresError when the table has no candidate for the question.
std::vector<std::string> propose_candidates(
    const OverlapMatch& match, const std::string& image_id, const std::string& question,
    const ScorerTable& answer_table,
    std::size_t max_k,
    const std::set<std::pair<std::string, std::string>>* equivalents = nullptr);

// ---------------------------------------------------------------------------
// Step 3: language-model filtering

struct CandidateScore {
  std::string contrast_caption;
  double lm_score = 0.0;
  std::string source_answer;
  int rank = 0;
};

std::string substitute(std::string_view caption, const Span& span, std::string_view replacement);

// Keeps candidates whose substituted caption scores >= threshold, ranked by
// descending score (stable). Throws MissingScoresError listing every
// substituted caption absent from the table.
std::vector<CandidateScore> filter_candidates(const std::vector<std::string>& candidates,
                                              const std::string& caption, const Span& span,
                                              const ScorerTable& lm_table, double threshold);

// ---------------------------------------------------------------------------
// Step 4: heterogeneous tasks

// Attaches a localization annotation when the concept names an object class
// with boxes on the sample's image; sets the generation prompt to the gold
// caption.
ContrastSample attach_heterogeneous_tasks(ContrastSample sample,
                                          const std::vector<ObjectBox>& boxes);

// Category guess from a small built-in lexicon; Misc when unknown.
Category guess_category(const std::vector<std::string>& concept_words,
                        const std::vector<ObjectBox>& image_boxes);

// ---------------------------------------------------------------------------
// Pipeline

struct PipelineConfig {
  double threshold = 0.0;
  std::size_t max_k = 5;
  std::set<std::pair<std::string, std::string>> equivalents;
};

struct ProvenanceEntry {
  std::string sample_id;
  std::string image_id;
  std::string step;     // "pivot", "propose", "filter", "attach"
  std::string subject;  // candidate answer or annotation name
  std::string outcome;  // e.g. "kept", "excluded_gold", "below_threshold"
  std::optional<double> score;
};

struct PipelineInputs {
  std::vector<Caption> captions;
  std::vector<QaPair> qa_pairs;
  std::vector<ObjectBox> boxes;
  ScorerTable answer_table;
  ScorerTable lm_table;
};

struct PipelineOutput {
  std::vector<ContrastSample> samples;
  std::vector<ProvenanceEntry> provenance;
};

// Steps 1-4 in sorted image-id order. Every missing scorer entry across the
// whole corpus is gathered before failing.
PipelineOutput run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config);

struct PipelinePaths {
  std::filesystem::path captions, qa, boxes, answer_scores, lm_scores;
};
PipelineInputs load_inputs(const PipelinePaths& paths);

std::string provenance_to_jsonl(const std::vector<ProvenanceEntry>& entries);

}  // namespace xconsist::congen
