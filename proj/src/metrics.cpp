#include "xconsist/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xconsist/errors.hpp"
#include "xconsist/text.hpp"

namespace xconsist {

namespace {

struct PairRecords {
  const LikelihoodRecord* anchor = nullptr;
  const LikelihoodRecord* eval = nullptr;
};

// Resolves both records of every sample, counting the ones that can't take
// part. Iteration follows sorted sample_id order.
template <typename Fn>
PairEligibility for_each_pair(const EvaluationBundle& bundle, const std::string& anchor,
                              const std::string& eval, Fn&& fn) {
  if (bundle.find_task(anchor) == nullptr) {
    throw ValidationError("anchor task '" + anchor + "' has no records");
  }
  if (bundle.find_task(eval) == nullptr) {
    throw ValidationError("evaluation task '" + eval + "' has no records");
  }
  PairEligibility elig;
  for (const auto& [id, sample] : bundle.samples) {
    const auto* a = bundle.find_record(id, anchor);
    const auto* e = bundle.find_record(id, eval);
    if (a == nullptr || e == nullptr) {
      ++elig.skipped;
      continue;
    }
    ++elig.with_both_records;
    if (a->contrasts.empty() || e->contrasts.empty()) {
      ++elig.empty;
      continue;
    }
    fn(PairRecords{a, e});
  }
  return elig;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

bool is_constant(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

}  // namespace

std::vector<std::string> rank_contrasts_by_difficulty(const LikelihoodRecord& anchor) {
  if (anchor.contrasts.empty()) {
    throw ValidationError("record (sample '" + anchor.sample_id + "', task '" +
                          anchor.task + "') has no contrasts to rank");
  }
  std::vector<const ContrastScore*> order;
  for (const auto& c : anchor.contrasts) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const ContrastScore* a, const ContrastScore* b) {
    if (a->loglik != b->loglik) return a->loglik > b->loglik;
    return a->contrast_id < b->contrast_id;
  });
  std::vector<std::string> ids;
  ids.reserve(order.size());
  for (const auto* c : order) ids.push_back(c->contrast_id);
  return ids;
}

PairwiseJudgement judge_pair(const LikelihoodRecord& anchor, const LikelihoodRecord& eval,
                             const std::string& contrast_id, int k) {
  const auto* ca = anchor.find(contrast_id);
  const auto* ce = eval.find(contrast_id);
  if (ca == nullptr || ce == nullptr) {
    throw ValidationError("contrast '" + contrast_id + "' missing from " +
                          (ca == nullptr ? "anchor" : "evaluation") +
                          " record of sample '" + anchor.sample_id + "'");
  }
  PairwiseJudgement j;
  j.sample_id = anchor.sample_id;
  j.k = k;
  j.anchor_prefers_gold = anchor.gold_loglik > ca->loglik;
  j.eval_prefers_gold = eval.gold_loglik > ce->loglik;
  j.anchor_tie = anchor.gold_loglik == ca->loglik;
  j.eval_tie = eval.gold_loglik == ce->loglik;
  // Strict on both sides: a tie prefers neither gold nor contrast.
  const bool anchor_prefers_contrast = anchor.gold_loglik < ca->loglik;
  const bool eval_prefers_contrast = eval.gold_loglik < ce->loglik;
  j.consistent = (j.anchor_prefers_gold && j.eval_prefers_gold) ||
                 (anchor_prefers_contrast && eval_prefers_contrast);
  return j;
}

std::vector<std::string> shared_contrasts_by_difficulty(const LikelihoodRecord& anchor,
                                                        const LikelihoodRecord& eval) {
  auto order = rank_contrasts_by_difficulty(anchor);
  std::erase_if(order, [&](const std::string& id) { return eval.find(id) == nullptr; });
  return order;
}

PairEligibility check_pair(const EvaluationBundle& bundle, const std::string& anchor,
                           const std::string& eval) {
  std::vector<std::string> errs;
  auto elig = for_each_pair(bundle, anchor, eval, [&](const PairRecords& p) {
    if (shared_contrasts_by_difficulty(*p.anchor, *p.eval).empty()) {
      errs.push_back("sample '" + p.anchor->sample_id + "': tasks '" + anchor + "' and '" +
                     eval + "' share no contrast_id");
    }
  });
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return elig;
}

std::vector<PairwiseJudgement> judgements_at_k(const EvaluationBundle& bundle,
                                               const std::string& anchor,
                                               const std::string& eval, int k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  std::vector<PairwiseJudgement> out;
  for_each_pair(bundle, anchor, eval, [&](const PairRecords& p) {
    const auto shared = shared_contrasts_by_difficulty(*p.anchor, *p.eval);
    if (shared.size() >= static_cast<std::size_t>(k)) {
      out.push_back(judge_pair(*p.anchor, *p.eval, shared[k - 1], k));
    }
  });
  return out;
}

KResult consistency_at_k(const EvaluationBundle& bundle, const std::string& anchor,
                         const std::string& eval, int k) {
  KResult r;
  for (const auto& j : judgements_at_k(bundle, anchor, eval, k)) {
    ++r.n;
    if (j.consistent) ++r.hits;
    if (j.anchor_tie || j.eval_tie) ++r.ties;
  }
  if (r.n > 0) r.value = static_cast<double>(r.hits) / static_cast<double>(r.n);
  return r;
}

KResult preference_accuracy_at_k(const EvaluationBundle& bundle, const std::string& anchor,
                                 const std::string& task, int k) {
  KResult r;
  for (const auto& j : judgements_at_k(bundle, anchor, task, k)) {
    ++r.n;
    if (j.eval_prefers_gold) ++r.hits;
    if (j.eval_tie) ++r.ties;
  }
  if (r.n > 0) r.value = static_cast<double>(r.hits) / static_cast<double>(r.n);
  return r;
}

std::vector<double> descending_average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    // Positions i..j (0-based) share the mean of ranks i+1..j+1.
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[idx[m]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("spearman: length mismatch");
  if (a.size() < 2) return std::nullopt;
  const auto ra = descending_average_ranks(a);
  const auto rb = descending_average_ranks(b);
  if (is_constant(ra) || is_constant(rb)) return std::nullopt;
  return std::clamp(pearson(ra, rb), -1.0, 1.0);
}

RhoResult rho_rank(const EvaluationBundle& bundle, const std::string& anchor,
                   const std::string& eval, RhoAggregation aggregation) {
  RhoResult result;
  double sum = 0.0;
  std::vector<double> pooled_a, pooled_e;
  for_each_pair(bundle, anchor, eval, [&](const PairRecords& p) {
    const auto shared = shared_contrasts_by_difficulty(*p.anchor, *p.eval);
    if (shared.size() < 2) return;
    std::vector<double> la, le;
    for (const auto& id : shared) {
      la.push_back(p.anchor->find(id)->loglik);
      le.push_back(p.eval->find(id)->loglik);
    }
    const auto rho = spearman(la, le);
    if (!rho) {
      ++result.degenerate;
      return;
    }
    ++result.n;
    sum += *rho;
    const auto ra = descending_average_ranks(la);
    const auto re = descending_average_ranks(le);
    pooled_a.insert(pooled_a.end(), ra.begin(), ra.end());
    pooled_e.insert(pooled_e.end(), re.begin(), re.end());
  });
  if (result.n == 0) {
    throw ValidationError("rho_rank: no sample has >= 2 shared contrasts with a "
                          "non-constant ranking for tasks '" +
                          anchor + "' and '" + eval + "'");
  }
  if (aggregation == RhoAggregation::PerSampleMean) {
    result.value = sum / static_cast<double>(result.n);
  } else {
    result.value = std::clamp(pearson(pooled_a, pooled_e), -1.0, 1.0);
  }
  return result;
}

ConsistencyReport build_report(const EvaluationBundle& bundle, const std::string& anchor,
                               const std::string& eval, int k_max,
                               RhoAggregation aggregation) {
  if (k_max < 1) throw ValidationError("k_max must be >= 1");
  const auto elig = check_pair(bundle, anchor, eval);
  ConsistencyReport rep;
  rep.anchor = anchor;
  rep.evaluation = eval;
  rep.k_max = k_max;
  rep.skipped = elig.skipped + elig.empty;
  for (int k = 1; k <= k_max; ++k) {
    std::size_t n = 0, consistent = 0, eval_hits = 0, anchor_hits = 0, ties = 0;
    for (const auto& j : judgements_at_k(bundle, anchor, eval, k)) {
      ++n;
      consistent += j.consistent;
      eval_hits += j.eval_prefers_gold;
      anchor_hits += j.anchor_prefers_gold;
      ties += (j.anchor_tie || j.eval_tie);
    }
    rep.n_samples_at_k[k] = n;
    rep.ties_at_k[k] = ties;
    if (n == 0) continue;
    const double dn = static_cast<double>(n);
    rep.consistency_at_k[k] = static_cast<double>(consistent) / dn;
    rep.preference_accuracy_at_k[k] = static_cast<double>(eval_hits) / dn;
    rep.anchor_preference_accuracy_at_k[k] = static_cast<double>(anchor_hits) / dn;
  }
  try {
    const auto rho = rho_rank(bundle, anchor, eval, aggregation);
    rep.rho_rank = rho.value;
    rep.rho_samples = rho.n;
  } catch (const ValidationError&) {
    rep.rho_rank.reset();
  }
  return rep;
}

std::string report_to_json(const ConsistencyReport& r) {
  using ojson = nlohmann::ordered_json;
  auto by_k = [](const auto& m) {
    ojson o = ojson::object();
    for (const auto& [k, v] : m) o[std::to_string(k)] = v;
    return o;
  };
  ojson j;
  j["anchor"] = r.anchor;
  j["evaluation"] = r.evaluation;
  j["k_max"] = r.k_max;
  j["n_samples_at_k"] = by_k(r.n_samples_at_k);
  j["consistency_at_k"] = by_k(r.consistency_at_k);
  j["preference_accuracy_at_k"] = by_k(r.preference_accuracy_at_k);
  j["anchor_preference_accuracy_at_k"] = by_k(r.anchor_preference_accuracy_at_k);
  j["ties_at_k"] = by_k(r.ties_at_k);
  j["rho_rank"] = r.rho_rank ? ojson(*r.rho_rank) : ojson(nullptr);
  j["rho_samples"] = r.rho_samples;
  j["skipped"] = r.skipped;
  return j.dump(2) + "\n";
}

namespace {

std::string cell(const std::map<int, double>& m, int k) {
  auto it = m.find(k);
  return it == m.end() ? std::string() : format_real(it->second);
}

}  // namespace

std::string report_to_ck_csv(const ConsistencyReport& r) {
  std::ostringstream os;
  os << "k,n,consistency,preference_accuracy\n";
  for (int k = 1; k <= r.k_max; ++k) {
    os << k << ',' << r.n_samples_at_k.at(k) << ',' << cell(r.consistency_at_k, k) << ','
       << cell(r.preference_accuracy_at_k, k) << '\n';
  }
  return os.str();
}

std::string report_to_scatter_csv(const ConsistencyReport& r) {
  std::ostringstream os;
  os << "k,anchor_accuracy,eval_accuracy,consistency\n";
  for (int k = 1; k <= r.k_max; ++k) {
    if (!r.consistency_at_k.count(k)) continue;
    os << k << ',' << cell(r.anchor_preference_accuracy_at_k, k) << ','
       << cell(r.preference_accuracy_at_k, k) << ',' << cell(r.consistency_at_k, k) << '\n';
  }
  return os.str();
}

}  // namespace xconsist
