#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace xconsist {

struct ScoredPrediction {
  std::string sample_id;
  double loglik = 0.0;
  // External quality score (e.g. an image-text similarity), never computed here.
  double quality = 0.0;

  bool operator==(const ScoredPrediction&) const = default;
};

enum class FitMode { BinMeans, PerSample };

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double mse = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares of y on x. Empty when fewer than two points or when
// x has zero variance.
std::optional<LinearFit> fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct ReliabilityMap {
  std::vector<double> bin_edges;  // n_bins + 1, ascending
  std::vector<double> bin_mean_loglik;
  std::vector<double> bin_mean_quality;
  std::vector<std::size_t> bin_count;
  std::vector<double> cumulative_fraction;
  // Empty when the slope is undefined (zero loglik range or < 2 fit points).
  std::optional<LinearFit> fit;
  FitMode fit_mode = FitMode::BinMeans;
  std::size_t n = 0;
};

// Index of the bin holding `loglik`: values on an interior edge go to the
// lower bin; the maximum goes to the last bin.
std::size_t bin_index(const std::vector<double>& edges, double loglik);

// Equal-width bins over the observed loglik range, per-bin means, a least
// squares fit of quality on loglik and the cumulative sample fraction. Empty
// bins carry NaN means and are excluded from the bin-mean fit. A zero-width
// range yields a single bin with no fit. Throws ValidationError when n < 2,
// n_bins < 1 or a value is non-finite.
ReliabilityMap reliability_map(const std::vector<ScoredPrediction>& data, std::size_t n_bins = 10,
                               FitMode mode = FitMode::BinMeans);

// loglik / t for every prediction. Throws ValidationError unless t > 0.
std::vector<ScoredPrediction> temperature_scale(const std::vector<ScoredPrediction>& data,
                                                double t);

// Drops the top (1 - q) fraction by loglik, then refits with freshly computed
// bins. Throws ValidationError unless 0 < q <= 1 and at least two points
// survive, or when the refit slope is undefined.
LinearFit quantile_fit(const std::vector<ScoredPrediction>& data, double q,
                       std::size_t n_bins = 10, FitMode mode = FitMode::BinMeans);

// The subset kept by quantile_fit, in input order.
std::vector<ScoredPrediction> lower_quantile(const std::vector<ScoredPrediction>& data, double q);

std::vector<ScoredPrediction> read_scores_csv(const std::filesystem::path& path);

std::string reliability_to_json(const ReliabilityMap& map, double temperature,
                                const std::optional<LinearFit>& quantile, double q);

}  // namespace xconsist
