#include "xconsist/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "xconsist/errors.hpp"
#include "xconsist/text.hpp"

namespace xconsist {

std::optional<LinearFit> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return std::nullopt;
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    sse += r * r;
  }
  fit.mse = sse / static_cast<double>(n);
  fit.points = n;
  return fit;
}

std::size_t bin_index(const std::vector<double>& edges, double loglik) {
  const std::size_t n_bins = edges.size() - 1;
  auto it = std::lower_bound(edges.begin() + 1, edges.end(), loglik);
  if (it == edges.end()) return n_bins - 1;
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

ReliabilityMap reliability_map(const std::vector<ScoredPrediction>& data, std::size_t n_bins,
                               FitMode mode) {
  if (data.size() < 2) throw ValidationError("reliability_map needs at least 2 predictions");
  if (n_bins < 1) throw ValidationError("reliability_map needs at least 1 bin");
  for (const auto& p : data) {
    if (!std::isfinite(p.loglik) || !std::isfinite(p.quality)) {
      throw ValidationError("prediction '" + p.sample_id + "' has a non-finite value");
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(
      data.begin(), data.end(),
      [](const ScoredPrediction& a, const ScoredPrediction& b) { return a.loglik < b.loglik; });
  const double lo = lo_it->loglik, hi = hi_it->loglik;

  ReliabilityMap map;
  map.n = data.size();
  map.fit_mode = mode;
  if (lo == hi) n_bins = 1;
  map.bin_edges.resize(n_bins + 1);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) map.bin_edges[i] = lo + static_cast<double>(i) * width;
  map.bin_edges[n_bins] = hi;

  std::vector<double> sum_ll(n_bins, 0.0), sum_q(n_bins, 0.0);
  map.bin_count.assign(n_bins, 0);
  for (const auto& p : data) {
    const std::size_t b = bin_index(map.bin_edges, p.loglik);
    sum_ll[b] += p.loglik;
    sum_q[b] += p.quality;
    ++map.bin_count[b];
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::size_t running = 0;
  std::vector<double> fx, fy;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const auto c = map.bin_count[b];
    running += c;
    map.cumulative_fraction.push_back(static_cast<double>(running) /
                                      static_cast<double>(map.n));
    if (c == 0) {
      map.bin_mean_loglik.push_back(nan);
      map.bin_mean_quality.push_back(nan);
      continue;
    }
    map.bin_mean_loglik.push_back(sum_ll[b] / static_cast<double>(c));
    map.bin_mean_quality.push_back(sum_q[b] / static_cast<double>(c));
    fx.push_back(map.bin_mean_loglik.back());
    fy.push_back(map.bin_mean_quality.back());
  }
  if (lo == hi) return map;

  if (mode == FitMode::PerSample) {
    fx.clear();
    fy.clear();
    for (const auto& p : data) {
      fx.push_back(p.loglik);
      fy.push_back(p.quality);
    }
  }
  map.fit = fit_line(fx, fy);
  return map;
}

std::vector<ScoredPrediction> temperature_scale(const std::vector<ScoredPrediction>& data,
                                                double t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw ValidationError("temperature must be positive and finite");
  }
  std::vector<ScoredPrediction> out = data;
  for (auto& p : out) p.loglik = p.loglik / t;
  return out;
}

std::vector<ScoredPrediction> lower_quantile(const std::vector<ScoredPrediction>& data,
                                             double q) {
  if (!(q > 0.0 && q <= 1.0)) throw ValidationError("quantile must satisfy 0 < q <= 1");
  const std::size_t n = data.size();
  const auto drop = static_cast<std::size_t>(
      std::floor((1.0 - q) * static_cast<double>(n) + 1e-9));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return data[a].loglik > data[b].loglik;
  });
  std::vector<bool> dropped(n, false);
  for (std::size_t i = 0; i < drop && i < n; ++i) dropped[idx[i]] = true;
  std::vector<ScoredPrediction> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (!dropped[i]) kept.push_back(data[i]);
  }
  return kept;
}

LinearFit quantile_fit(const std::vector<ScoredPrediction>& data, double q, std::size_t n_bins,
                       FitMode mode) {
  const auto kept = lower_quantile(data, q);
  if (kept.size() < 2) {
    throw ValidationError("quantile " + format_real(q) + " leaves " +
                          std::to_string(kept.size()) + " point(s); need at least 2");
  }
  const auto map = reliability_map(kept, n_bins, mode);
  if (!map.fit) throw ValidationError("quantile refit has an undefined slope");
  return *map.fit;
}

std::vector<ScoredPrediction> read_scores_csv(const std::filesystem::path& path) {
  const auto table = read_csv_file(path, {"sample_id", "loglik", "quality"});
  std::vector<ScoredPrediction> out;
  std::vector<std::string> errs;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path.string() + ":" + std::to_string(table.line_numbers[i]);
    try {
      out.push_back({row[0], parse_real(row[1], where + ": loglik"),
                     parse_real(row[2], where + ": quality")});
    } catch (const ValidationError& e) {
      errs.push_back(e.what());
    }
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return out;
}

std::string reliability_to_json(const ReliabilityMap& map, double temperature,
                                const std::optional<LinearFit>& quantile, double q) {
  using ojson = nlohmann::ordered_json;
  auto reals = [](const std::vector<double>& v) {
    ojson a = ojson::array();
    for (double x : v) a.push_back(std::isfinite(x) ? ojson(x) : ojson(nullptr));
    return a;
  };
  auto fit_json = [](const std::optional<LinearFit>& f) {
    if (!f) return ojson(nullptr);
    return ojson{{"slope", f->slope},
                 {"intercept", f->intercept},
                 {"mse", f->mse},
                 {"points", f->points}};
  };
  ojson j;
  j["n"] = map.n;
  j["temperature"] = temperature;
  j["fit_mode"] = map.fit_mode == FitMode::BinMeans ? "bin_means" : "per_sample";
  j["bin_edges"] = reals(map.bin_edges);
  j["bin_mean_loglik"] = reals(map.bin_mean_loglik);
  j["bin_mean_quality"] = reals(map.bin_mean_quality);
  j["bin_count"] = map.bin_count;
  j["cumulative_fraction"] = reals(map.cumulative_fraction);
  j["slope_defined"] = map.fit.has_value();
  j["fit"] = fit_json(map.fit);
  j["quantile"] = q;
  j["quantile_fit"] = fit_json(quantile);
  return j.dump(2) + "\n";
}

}  // namespace xconsist
