#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace xconsist {

enum class RankDirection {
  // Largest score gets rank 1 (scores are likelihoods).
  HigherScoreLowerRank,
  // Smallest score gets rank 1 (scores are losses).
  HigherScoreHigherRank,
};

struct SoftRankConfig {
  double epsilon = 1.0;
  RankDirection direction = RankDirection::HigherScoreLowerRank;
};

// Derivative of soft_rank with respect to the scores.
//
// With z = sign * scores / epsilon sorted descending by `order`, the
// projection onto the permutahedron is z - v where v is the isotonic fit of
// z_sorted - (n, ..., 1). Within each pooled block of the fit, v moves by the
// block mean of z, so in sorted coordinates the Jacobian is I - blockdiag(1/|B|)
// and the full Jacobian is sign/epsilon * P^T (I - A) P, which is symmetric.
class RankJacobian {
 public:
  RankJacobian() = default;
  RankJacobian(std::vector<std::size_t> order, std::vector<std::size_t> block_starts,
               double scale);

  std::size_t size() const { return order_.size(); }
  // order()[i] is the original index at sorted position i.
  const std::vector<std::size_t>& order() const { return order_; }
  // Start offsets (in sorted positions) of the pooled blocks; first is 0.
  const std::vector<std::size_t>& block_starts() const { return block_starts_; }
  // sign / epsilon.
  double scale() const { return scale_; }

  // J * u.
  std::vector<double> apply(std::span<const double> u) const;
  // J^T * u (equal to apply; J is symmetric).
  std::vector<double> apply_transpose(std::span<const double> u) const;
  // Row-major n*n matrix.
  std::vector<double> dense() const;

 private:
  std::vector<std::size_t> order_;
  std::vector<std::size_t> block_starts_;
  double scale_ = 1.0;
};

struct SoftRankResult {
  std::vector<double> ranks;
  RankJacobian jacobian;
};

// Euclidean projection of (sign * scores / epsilon) onto the permutahedron of
// (1, ..., n). Entries lie in [1, n] and sum to n(n+1)/2. O(n log n).
// Throws std::invalid_argument for n == 0, non-finite scores or epsilon <= 0.
std::vector<double> soft_rank(std::span<const double> scores, const SoftRankConfig& config);

RankJacobian soft_rank_jacobian(std::span<const double> scores, const SoftRankConfig& config);

SoftRankResult soft_rank_with_jacobian(std::span<const double> scores,
                                       const SoftRankConfig& config);

// Pool-adjacent-violators fit of a non-increasing sequence to `y` under
// squared loss. Returns the fitted values and the start offset of each block.
struct IsotonicFit {
  std::vector<double> values;
  std::vector<std::size_t> block_starts;
};
IsotonicFit isotonic_nonincreasing(std::span<const double> y);

struct ConsistencyLoss {
  double loss = 0.0;
  std::vector<double> grad_anchor;
  std::vector<double> grad_eval;
};

// 0.5 * ||soft_rank(anchor) - soft_rank(eval)||^2 with gradients for both
// score vectors. Entry i of each vector must score the same candidate.
ConsistencyLoss consistency_loss(std::span<const double> anchor_scores,
                                 std::span<const double> eval_scores,
                                 const SoftRankConfig& config);

// lambda * const_loss + ce_loss.
double combined_loss(double ce_loss, double const_loss, double lambda);

}  // namespace xconsist
