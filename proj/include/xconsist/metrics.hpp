#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xconsist/model.hpp"

namespace xconsist {

struct PairwiseJudgement {
  std::string sample_id;
  int k = 1;
  bool consistent = false;
  bool anchor_prefers_gold = false;
  bool eval_prefers_gold = false;
  // Exact gold == contrast ties; counted as not preferring gold.
  bool anchor_tie = false;
  bool eval_tie = false;
};

// Contrast ids ordered hardest first: descending contrast loglik, ties by
// ascending contrast_id. Throws ValidationError on an empty contrast list.
std::vector<std::string> rank_contrasts_by_difficulty(const LikelihoodRecord& anchor);

// Cross-task consistency of one contrast: both records prefer gold, or both
// prefer the contrast. Strict comparisons.
PairwiseJudgement judge_pair(const LikelihoodRecord& anchor,
                             const LikelihoodRecord& eval,
                             const std::string& contrast_id, int k = 1);

// Result of a metric at one difficulty k. `value` is empty when no sample is
// eligible (it is never silently 0).
struct KResult {
  std::optional<double> value;
  std::size_t n = 0;
  std::size_t hits = 0;
  std::size_t ties = 0;
};

struct PairEligibility {
  std::size_t with_both_records = 0;
  // Samples missing the anchor or evaluation record.
  std::size_t skipped = 0;
  // Records present but with an empty contrast list on one side.
  std::size_t empty = 0;
};

// Contrast ids present in both records, in anchor difficulty order.
std::vector<std::string> shared_contrasts_by_difficulty(const LikelihoodRecord& anchor,
                                                        const LikelihoodRecord& eval);

// Throws ValidationError when a sample has both records, both non-empty, but no
// shared contrast_id. Returns the eligibility counts otherwise.
PairEligibility check_pair(const EvaluationBundle& bundle, const std::string& anchor,
                           const std::string& eval);

std::vector<PairwiseJudgement> judgements_at_k(const EvaluationBundle& bundle,
                                               const std::string& anchor,
                                               const std::string& eval, int k);

KResult consistency_at_k(const EvaluationBundle& bundle, const std::string& anchor,
                         const std::string& eval, int k);

// Fraction of samples where `task`'s gold loglik strictly exceeds its loglik
// for the k-th hardest contrast, difficulty ordered by the anchor record and
// restricted to contrasts shared with `task`.
KResult preference_accuracy_at_k(const EvaluationBundle& bundle,
                                 const std::string& anchor, const std::string& task,
                                 int k);

// Spearman correlation of two score vectors (descending rank, ties averaged).
// Empty when either side is constant.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

// Average ranks, rank 1 = largest value.
std::vector<double> descending_average_ranks(std::span<const double> values);

enum class RhoAggregation { PerSampleMean, Pooled };

struct RhoResult {
  double value = 0.0;
  std::size_t n = 0;
  // Samples with >= 2 shared contrasts whose ranking is constant on one side.
  std::size_t degenerate = 0;
};

// Throws ValidationError when no sample has >= 2 shared contrasts with a
// non-constant ranking on both sides.
RhoResult rho_rank(const EvaluationBundle& bundle, const std::string& anchor,
                   const std::string& eval,
                   RhoAggregation aggregation = RhoAggregation::PerSampleMean);

struct ConsistencyReport {
  std::string anchor;
  std::string evaluation;
  int k_max = 0;
  std::map<int, std::size_t> n_samples_at_k;
  std::map<int, double> consistency_at_k;  // only k with n > 0
  std::map<int, double> preference_accuracy_at_k;
  std::map<int, double> anchor_preference_accuracy_at_k;
  std::map<int, std::size_t> ties_at_k;
  std::optional<double> rho_rank;
  std::size_t rho_samples = 0;
  std::size_t skipped = 0;
};

ConsistencyReport build_report(const EvaluationBundle& bundle, const std::string& anchor,
                               const std::string& eval, int k_max,
                               RhoAggregation aggregation = RhoAggregation::PerSampleMean);

std::string report_to_json(const ConsistencyReport& report);
// k,n,consistency,preference_accuracy rows; empty cells where n = 0.
std::string report_to_ck_csv(const ConsistencyReport& report);
// k,anchor_accuracy,eval_accuracy,consistency rows for accuracy-vs-consistency plots.
std::string report_to_scatter_csv(const ConsistencyReport& report);

}  // namespace xconsist
