#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xconsist {

// Where the semantic perturbation lives: in the task's output (captioning,
// VQA) or in its input (localization query, generation prompt).
enum class PerturbationMode { ContrastOutput, ContrastInput };

std::string_view to_string(PerturbationMode mode);
PerturbationMode parse_perturbation_mode(std::string_view text);

struct TaskRef {
  std::string name;
  PerturbationMode mode = PerturbationMode::ContrastOutput;
  bool is_anchor = false;

  bool operator==(const TaskRef&) const = default;
};

enum class Category {
  Object,
  Attribute,
  Food,
  Animal,
  Location,
  Role,
  Action,
  Person,
  OCR,
  Misc,
};

inline constexpr std::array<Category, 10> kAllCategories = {
    Category::Object, Category::Attribute, Category::Food,   Category::Animal,
    Category::Location, Category::Role,    Category::Action, Category::Person,
    Category::OCR,    Category::Misc};

std::string_view to_string(Category category);
std::optional<Category> parse_category(std::string_view text);

// Half-open [begin, end) character offsets into a caption.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const Span&) const = default;
};

struct VqaAnnotation {
  std::string question;
  std::string answer;
  bool operator==(const VqaAnnotation&) const = default;
};

// [x, y, w, h] in pixels.
using Box = std::array<double, 4>;

struct LocalizationAnnotation {
  std::string query;
  std::vector<Box> boxes;
  bool operator==(const LocalizationAnnotation&) const = default;
};

struct Contrast {
  std::string contrast_id;
  std::string replacement;
  bool operator==(const Contrast&) const = default;
};

struct ContrastSample {
  std::string sample_id;
  std::string image_id;
  std::string caption;
  Span concept_span;
  Category category = Category::Misc;
  std::optional<VqaAnnotation> vqa;
  std::optional<LocalizationAnnotation> localization;
  std::optional<std::string> generation_prompt;
  std::vector<Contrast> contrasts;

  std::string concept_text() const {
    return caption.substr(concept_span.begin, concept_span.size());
  }
  bool operator==(const ContrastSample&) const = default;
};

struct ContrastScore {
  std::string contrast_id;
  double loglik = 0.0;
  bool operator==(const ContrastScore&) const = default;
};

// Natural-log likelihoods for one (sample, task). For ContrastInput tasks the
// contrast entries hold the likelihood of the gold output given the contrast
// input.
struct LikelihoodRecord {
  std::string sample_id;
  std::string task;
  PerturbationMode mode = PerturbationMode::ContrastOutput;
  double gold_loglik = 0.0;
  std::vector<ContrastScore> contrasts;

  const ContrastScore* find(std::string_view contrast_id) const;
  bool operator==(const LikelihoodRecord&) const = default;
};

using RecordKey = std::pair<std::string, std::string>;  // (sample_id, task)

struct EvaluationBundle {
  std::map<std::string, ContrastSample> samples;
  std::map<RecordKey, LikelihoodRecord> records;
  std::vector<TaskRef> tasks;

  const TaskRef* find_task(std::string_view name) const;
  const LikelihoodRecord* find_record(const std::string& sample_id,
                                      const std::string& task) const;
  const TaskRef* anchor() const;
  bool operator==(const EvaluationBundle&) const = default;
};

// Invariant checks. Each returns the list of violations; empty means valid.
std::vector<std::string> check_sample(const ContrastSample& sample);
std::vector<std::string> check_record(const LikelihoodRecord& record,
                                      const ContrastSample* sample);
std::vector<std::string> check_bundle(const EvaluationBundle& bundle);

// Builds a bundle from parts, deriving the task list from the records and
// validating everything. An empty anchor name leaves no task marked anchor.
// Throws ValidationError listing every violation.
EvaluationBundle make_bundle(std::vector<ContrastSample> samples,
                             std::vector<LikelihoodRecord> records,
                             const std::string& anchor = {});

// Marks `name` as the anchor task (clearing any previous anchor).
void set_anchor(EvaluationBundle& bundle, const std::string& name);

struct CategoryCount {
  std::size_t samples = 0;
  std::size_t contrasts = 0;
};

struct DatasetStats {
  std::size_t samples = 0;
  std::size_t contrast_sets = 0;
  double mean_contrasts_per_sample = 0.0;
  std::size_t with_vqa = 0;
  std::size_t with_localization = 0;
  std::size_t with_generation = 0;
  std::map<Category, CategoryCount> per_category;
};

DatasetStats dataset_stats(const EvaluationBundle& bundle);
DatasetStats dataset_stats(const std::vector<ContrastSample>& samples);

}  // namespace xconsist
