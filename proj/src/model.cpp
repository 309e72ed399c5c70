#include "xconsist/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "xconsist/errors.hpp"

namespace xconsist {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> diagnostics)
    : Error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::string_view to_string(PerturbationMode mode) {
  return mode == PerturbationMode::ContrastOutput ? "contrast_output"
                                                  : "contrast_input";
}

PerturbationMode parse_perturbation_mode(std::string_view text) {
  if (text == "contrast_output") return PerturbationMode::ContrastOutput;
  if (text == "contrast_input") return PerturbationMode::ContrastInput;
  throw ValidationError("unknown perturbation mode '" + std::string(text) +
                        "'");
}

std::string_view to_string(Category category) {
  switch (category) {
    case Category::Object: return "object";
    case Category::Attribute: return "attribute";
    case Category::Food: return "food";
    case Category::Animal: return "animal";
    case Category::Location: return "location";
    case Category::Role: return "role";
    case Category::Action: return "action";
    case Category::Person: return "person";
    case Category::OCR: return "ocr";
    case Category::Misc: return "misc";
  }
  return "misc";
}

std::optional<Category> parse_category(std::string_view text) {
  for (Category c : kAllCategories) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

const ContrastScore* LikelihoodRecord::find(std::string_view contrast_id) const {
  for (const auto& c : contrasts) {
    if (c.contrast_id == contrast_id) return &c;
  }
  return nullptr;
}

const TaskRef* EvaluationBundle::find_task(std::string_view name) const {
  for (const auto& t : tasks) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const LikelihoodRecord* EvaluationBundle::find_record(
    const std::string& sample_id, const std::string& task) const {
  auto it = records.find({sample_id, task});
  return it == records.end() ? nullptr : &it->second;
}

const TaskRef* EvaluationBundle::anchor() const {
  for (const auto& t : tasks) {
    if (t.is_anchor) return &t;
  }
  return nullptr;
}

std::vector<std::string> check_sample(const ContrastSample& s) {
  std::vector<std::string> errs;
  const std::string where = "sample '" + s.sample_id + "': ";
  if (s.sample_id.empty()) errs.push_back("sample with empty sample_id");
  if (s.concept_span.begin >= s.concept_span.end) {
    errs.push_back(where + "concept_span is empty");
  } else if (s.concept_span.end > s.caption.size()) {
    errs.push_back(where + "concept_span exceeds caption length " +
                   std::to_string(s.caption.size()));
  }
  const bool span_ok = s.concept_span.begin < s.concept_span.end &&
                       s.concept_span.end <= s.caption.size();
  const std::string original = span_ok ? s.concept_text() : std::string{};

  std::set<std::string> ids;
  std::set<std::string> replacements;
  for (const auto& c : s.contrasts) {
    if (c.contrast_id.empty()) errs.push_back(where + "empty contrast_id");
    if (!ids.insert(c.contrast_id).second) {
      errs.push_back(where + "duplicate contrast_id '" + c.contrast_id + "'");
    }
    if (!replacements.insert(c.replacement).second) {
      errs.push_back(where + "duplicate replacement '" + c.replacement + "'");
    }
    if (span_ok && c.replacement == original) {
      errs.push_back(where + "replacement '" + c.replacement +
                     "' equals the original concept text");
    }
  }
  if (s.localization) {
    for (const auto& box : s.localization->boxes) {
      if (!std::all_of(box.begin(), box.end(),
                       [](double v) { return std::isfinite(v); })) {
        errs.push_back(where + "non-finite box coordinate");
      }
    }
  }
  return errs;
}

std::vector<std::string> check_record(const LikelihoodRecord& r,
                                      const ContrastSample* sample) {
  std::vector<std::string> errs;
  const std::string where =
      "record (sample '" + r.sample_id + "', task '" + r.task + "'): ";
  if (r.task.empty()) errs.push_back(where + "empty task name");
  if (!std::isfinite(r.gold_loglik)) errs.push_back(where + "non-finite gold_loglik");
  std::set<std::string> seen;
  for (const auto& c : r.contrasts) {
    if (!std::isfinite(c.loglik)) {
      errs.push_back(where + "non-finite loglik for contrast '" +
                     c.contrast_id + "'");
    }
    if (!seen.insert(c.contrast_id).second) {
      errs.push_back(where + "duplicate contrast_id '" + c.contrast_id + "'");
    }
    if (sample != nullptr) {
      const bool known = std::any_of(
          sample->contrasts.begin(), sample->contrasts.end(),
          [&](const Contrast& sc) { return sc.contrast_id == c.contrast_id; });
      if (!known) {
        errs.push_back(where + "unknown contrast_id '" + c.contrast_id + "'");
      }
    }
  }
  return errs;
}

std::vector<std::string> check_bundle(const EvaluationBundle& b) {
  std::vector<std::string> errs;
  for (const auto& [id, s] : b.samples) {
    if (id != s.sample_id) {
      errs.push_back("sample map key '" + id + "' does not match sample_id '" +
                     s.sample_id + "'");
    }
    auto e = check_sample(s);
    errs.insert(errs.end(), e.begin(), e.end());
  }
  std::set<std::string> task_names;
  std::size_t anchors = 0;
  for (const auto& t : b.tasks) {
    if (!task_names.insert(t.name).second) {
      errs.push_back("duplicate task '" + t.name + "'");
    }
    if (t.is_anchor) {
      ++anchors;
      if (t.mode != PerturbationMode::ContrastOutput) {
        errs.push_back("anchor task '" + t.name + "' must be contrast_output");
      }
    }
  }
  if (anchors > 1) errs.push_back("more than one anchor task");

  for (const auto& [key, r] : b.records) {
    if (key.first != r.sample_id || key.second != r.task) {
      errs.push_back("record key does not match record (sample '" +
                     r.sample_id + "', task '" + r.task + "')");
    }
    auto sit = b.samples.find(r.sample_id);
    if (sit == b.samples.end()) {
      errs.push_back("record references unknown sample '" + r.sample_id + "'");
    }
    const TaskRef* task = b.find_task(r.task);
    if (task == nullptr) {
      errs.push_back("record references undeclared task '" + r.task + "'");
    } else if (task->mode != r.mode) {
      errs.push_back("record (sample '" + r.sample_id + "', task '" + r.task +
                     "') mode differs from the task's declared mode");
    }
    auto e = check_record(r, sit == b.samples.end() ? nullptr : &sit->second);
    errs.insert(errs.end(), e.begin(), e.end());
  }
  return errs;
}

EvaluationBundle make_bundle(std::vector<ContrastSample> samples,
                             std::vector<LikelihoodRecord> records,
                             const std::string& anchor) {
  EvaluationBundle b;
  std::vector<std::string> errs;
  for (auto& s : samples) {
    std::string id = s.sample_id;
    if (!b.samples.emplace(id, std::move(s)).second) {
      errs.push_back("duplicate sample_id '" + id + "'");
    }
  }
  for (auto& r : records) {
    if (b.find_task(r.task) == nullptr) {
      b.tasks.push_back(TaskRef{r.task, r.mode, false});
    }
    RecordKey key{r.sample_id, r.task};
    if (!b.records.emplace(key, std::move(r)).second) {
      errs.push_back("duplicate record for (sample '" + key.first +
                     "', task '" + key.second + "')");
    }
  }
  auto e = check_bundle(b);
  errs.insert(errs.end(), e.begin(), e.end());
  if (!errs.empty()) throw ValidationError(std::move(errs));
  if (!anchor.empty()) set_anchor(b, anchor);
  return b;
}

void set_anchor(EvaluationBundle& bundle, const std::string& name) {
  TaskRef* found = nullptr;
  for (auto& t : bundle.tasks) {
    if (t.name == name) found = &t;
  }
  if (found == nullptr) {
    throw ValidationError("anchor task '" + name + "' has no records");
  }
  if (found->mode != PerturbationMode::ContrastOutput) {
    throw ValidationError("anchor task '" + name +
                          "' must use contrast_output mode");
  }
  for (auto& t : bundle.tasks) t.is_anchor = (&t == found);
}

DatasetStats dataset_stats(const std::vector<ContrastSample>& samples) {
  DatasetStats st;
  for (Category c : kAllCategories) st.per_category[c] = {};
  for (const auto& s : samples) {
    ++st.samples;
    st.contrast_sets += s.contrasts.size();
    auto& cc = st.per_category[s.category];
    ++cc.samples;
    cc.contrasts += s.contrasts.size();
    if (s.vqa) ++st.with_vqa;
    if (s.localization) ++st.with_localization;
    if (s.generation_prompt) ++st.with_generation;
  }
  if (st.samples > 0) {
    st.mean_contrasts_per_sample =
        static_cast<double>(st.contrast_sets) / static_cast<double>(st.samples);
  }
  return st;
}

DatasetStats dataset_stats(const EvaluationBundle& bundle) {
  std::vector<ContrastSample> v;
  v.reserve(bundle.samples.size());
  for (const auto& [id, s] : bundle.samples) v.push_back(s);
  return dataset_stats(v);
}

}  // namespace xconsist
