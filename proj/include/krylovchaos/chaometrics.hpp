#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"

namespace krylovchaos {

/// Mean consecutive-spacing ratio for Poisson level statistics.
inline constexpr double kRatioPoisson = 0.38629;
/// Mean consecutive-spacing ratio for the Gaussian orthogonal ensemble.
inline constexpr double kRatioGoe = 0.53590;

/// Mean of min(s_n, s_{n-1}) / max(s_n, s_{n-1}) over the D-2 interior ratios
/// of a strictly increasing spectrum.
inline double r_ratio_mean(std::span<const double> levels) {
  require(levels.size() >= 3, "r-ratio needs at least three levels");
  double sum = 0.0;
  double prev = levels[1] - levels[0];
  if (!(prev > 0.0)) throw DegenerateSpectrumError("r-ratio: levels must be strictly increasing");
  for (std::size_t i = 2; i < levels.size(); ++i) {
    const double s = levels[i] - levels[i - 1];
    if (!(s > 0.0)) throw DegenerateSpectrumError("r-ratio: levels must be strictly increasing");
    sum += std::min(s, prev) / std::max(s, prev);
    prev = s;
  }
  return sum / static_cast<double>(levels.size() - 2);
}

inline double r_ratio_mean(const Vector& levels) {
  return r_ratio_mean(std::span<const double>(levels.data(), static_cast<std::size_t>(levels.size())));
}

/// 0 for Poisson statistics, 1 for GOE.
constexpr double eta(double r_mean) {
  return (r_mean - kRatioPoisson) / (kRatioGoe - kRatioPoisson);
}

/// Population standard deviation of ln|b_{2n-1} / b_{2n}| over complete pairs.
/// The span holds b_1, b_2, ... in order.
inline double sigma_log(std::span<const double> b) {
  require(b.size() >= 4, "sigma_log needs at least four entries");
  std::vector<double> x;
  x.reserve(b.size() / 2);
  for (std::size_t i = 0; i + 1 < b.size(); i += 2) {
    if (b[i] == 0.0 || b[i + 1] == 0.0) throw ArgumentError("sigma_log: zero Lanczos coefficient");
    x.push_back(std::log(std::abs(b[i] / b[i + 1])));
  }
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(x.size()));
}

struct DispersionConfig {
  double w_frac = 0.025;  // half-width of the moving window / sequence length
  double n0_frac = 0.1;   // first index included / sequence length

  void validate() const {
    require(w_frac > 0.0 && w_frac < 0.5, "w_frac must lie in (0, 0.5)");
    require(n0_frac >= 0.0 && n0_frac < 1.0, "n0_frac must lie in [0, 1)");
  }
};

/// RMS deviation of s_n from its centered (2w+1)-point moving average, over
/// n in [n0, N-1-w]. Requires n0 >= w so the full window always fits.
inline double sigma_moving(std::span<const double> s, std::size_t w, std::size_t n0) {
  const std::size_t n = s.size();
  require(w >= 1, "moving-average half-width must be >= 1");
  require(n0 >= w, "n0 must be >= the window half-width");
  if (n < 2 * w + 1 || n0 + w > n - 1)
    throw ArgumentError("moving-average window exceeds the sequence (length " + std::to_string(n) +
                        ", w " + std::to_string(w) + ", n0 " + std::to_string(n0) + ")");
  const double width = static_cast<double>(2 * w + 1);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = n0; i + w <= n - 1; ++i) {
    const double mean = std::accumulate(s.begin() + (i - w), s.begin() + (i + w + 1), 0.0) / width;
    acc += (s[i] - mean) * (s[i] - mean);
    ++count;
  }
  return std::sqrt(acc / static_cast<double>(count));
}

/// Window parameters resolved from the fractional configuration.
struct DispersionWindow {
  std::size_t w = 1;
  std::size_t n0 = 1;
};

inline DispersionWindow resolve_window(std::size_t length, const DispersionConfig& cfg) {
  cfg.validate();
  if (static_cast<double>(length) * cfg.w_frac < 1.0 - 1e-12)
    throw ArgumentError("sequence of length " + std::to_string(length) +
                        " is shorter than 1 / w_frac");
  DispersionWindow win;
  win.w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.w_frac * length)));
  win.n0 = std::max(static_cast<std::size_t>(std::lround(cfg.n0_frac * length)), win.w);
  return win;
}

inline double sigma_moving(std::span<const double> s, const DispersionConfig& cfg = {}) {
  const auto win = resolve_window(s.size(), cfg);
  return sigma_moving(s, win.w, win.n0);
}

/// Rescales x to the spread of eta_ref and shifts it by the least-squares
/// offset, so that mean(result - eta_ref) == 0.
inline std::vector<double> normalize_to_eta(std::span<const double> x, std::span<const double> eta_ref) {
  require(x.size() == eta_ref.size() && x.size() >= 2,
          "normalize_to_eta needs two equal-length sequences of length >= 2");
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  const auto [emin, emax] = std::minmax_element(eta_ref.begin(), eta_ref.end());
  const double xr = *xmax - *xmin;
  if (!(xr > 0.0)) throw ArgumentError("normalize_to_eta: input has zero range");
  const double scale = (*emax - *emin) / xr;
  std::vector<double> out(x.size());
  double shift = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] * scale;
    shift += out[i] - eta_ref[i];
  }
  shift /= static_cast<double>(x.size());
  for (double& v : out) v -= shift;
  return out;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman_correlation(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "spearman needs equal-length inputs (>= 2)");
  const auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j);
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace krylovchaos
