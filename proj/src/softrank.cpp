#include "xconsist/softrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace xconsist {

IsotonicFit isotonic_nonincreasing(std::span<const double> y) {
  // Blocks kept on a stack as (start, sum, count); a new point merges
  // backwards while it would raise the previous block's mean.
  struct Block {
    std::size_t start;
    double sum;
    double count;
  };
  std::vector<Block> stack;
  stack.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    Block b{i, y[i], 1.0};
    while (!stack.empty() && stack.back().sum / stack.back().count < b.sum / b.count) {
      const Block& prev = stack.back();
      b = Block{prev.start, prev.sum + b.sum, prev.count + b.count};
      stack.pop_back();
    }
    stack.push_back(b);
  }
  IsotonicFit fit;
  fit.values.resize(y.size());
  for (std::size_t bi = 0; bi < stack.size(); ++bi) {
    const std::size_t end = bi + 1 < stack.size() ? stack[bi + 1].start : y.size();
    const double mean = stack[bi].sum / stack[bi].count;
    std::fill(fit.values.begin() + static_cast<std::ptrdiff_t>(stack[bi].start),
              fit.values.begin() + static_cast<std::ptrdiff_t>(end), mean);
    fit.block_starts.push_back(stack[bi].start);
  }
  return fit;
}

RankJacobian::RankJacobian(std::vector<std::size_t> order,
                           std::vector<std::size_t> block_starts, double scale)
    : order_(std::move(order)), block_starts_(std::move(block_starts)), scale_(scale) {}

std::vector<double> RankJacobian::apply(std::span<const double> u) const {
  const std::size_t n = order_.size();
  if (u.size() != n) throw std::invalid_argument("RankJacobian: size mismatch");
  std::vector<double> out(n);
  for (std::size_t b = 0; b < block_starts_.size(); ++b) {
    const std::size_t start = block_starts_[b];
    const std::size_t end = b + 1 < block_starts_.size() ? block_starts_[b + 1] : n;
    double mean = 0.0;
    for (std::size_t i = start; i < end; ++i) mean += u[order_[i]];
    mean /= static_cast<double>(end - start);
    for (std::size_t i = start; i < end; ++i) {
      out[order_[i]] = scale_ * (u[order_[i]] - mean);
    }
  }
  return out;
}

std::vector<double> RankJacobian::apply_transpose(std::span<const double> u) const {
  return apply(u);
}

std::vector<double> RankJacobian::dense() const {
  const std::size_t n = order_.size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t b = 0; b < block_starts_.size(); ++b) {
    const std::size_t start = block_starts_[b];
    const std::size_t end = b + 1 < block_starts_.size() ? block_starts_[b + 1] : n;
    const double inv = 1.0 / static_cast<double>(end - start);
    for (std::size_t i = start; i < end; ++i) {
      for (std::size_t j = start; j < end; ++j) {
        m[order_[i] * n + order_[j]] = scale_ * ((i == j ? 1.0 : 0.0) - inv);
      }
    }
  }
  return m;
}

namespace {

void check_inputs(std::span<const double> scores, const SoftRankConfig& config) {
  if (scores.empty()) throw std::invalid_argument("soft_rank: empty score vector");
  if (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon)) {
    throw std::invalid_argument("soft_rank: epsilon must be positive and finite");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw std::invalid_argument("soft_rank: non-finite score at index " + std::to_string(i));
    }
  }
}

}  // namespace

SoftRankResult soft_rank_with_jacobian(std::span<const double> scores,
                                       const SoftRankConfig& config) {
  check_inputs(scores, config);
  const std::size_t n = scores.size();
  const double sign = config.direction == RankDirection::HigherScoreLowerRank ? -1.0 : 1.0;
  const double scale = sign / config.epsilon;

  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = scale * scores[i];

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });

  // y_i = z_sorted_i - w_i with w = (n, n-1, ..., 1).
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = z[order[i]] - static_cast<double>(n - i);
  auto fit = isotonic_nonincreasing(y);

  SoftRankResult out;
  out.ranks.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.ranks[order[i]] = z[order[i]] - fit.values[i];
  }
  out.jacobian = RankJacobian(std::move(order), std::move(fit.block_starts), scale);
  return out;
}

std::vector<double> soft_rank(std::span<const double> scores, const SoftRankConfig& config) {
  return soft_rank_with_jacobian(scores, config).ranks;
}

RankJacobian soft_rank_jacobian(std::span<const double> scores, const SoftRankConfig& config) {
  return soft_rank_with_jacobian(scores, config).jacobian;
}

ConsistencyLoss consistency_loss(std::span<const double> anchor_scores,
                                 std::span<const double> eval_scores,
                                 const SoftRankConfig& config) {
  if (anchor_scores.size() != eval_scores.size()) {
    throw std::invalid_argument("consistency_loss: length mismatch (" +
                                std::to_string(anchor_scores.size()) + " vs " +
                                std::to_string(eval_scores.size()) + ")");
  }
  if (anchor_scores.size() < 2) {
    throw std::invalid_argument("consistency_loss: need at least two candidates");
  }
  const auto ra = soft_rank_with_jacobian(anchor_scores, config);
  const auto re = soft_rank_with_jacobian(eval_scores, config);
  const std::size_t n = anchor_scores.size();
  std::vector<double> diff(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = ra.ranks[i] - re.ranks[i];
    loss += diff[i] * diff[i];
  }
  ConsistencyLoss out;
  out.loss = 0.5 * loss;
  out.grad_anchor = ra.jacobian.apply_transpose(diff);
  out.grad_eval = re.jacobian.apply_transpose(diff);
  for (double& g : out.grad_eval) g = -g;
  return out;
}

double combined_loss(double ce_loss, double const_loss, double lambda) {
  return lambda * const_loss + ce_loss;
}

}  // namespace xconsist
