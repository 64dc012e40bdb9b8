#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "core.hpp"
#include "hamiltonians.hpp"
#include "krylov.hpp"
#include "states.hpp"

namespace krylovchaos {

/// Leading-order saturation bound for a state (|e_j> + delta |e~_j>)/norm:
/// (3D/2 - 1) delta^2.
constexpr double bound_rhs(Eigen::Index dim, double delta) {
  return (1.5 * static_cast<double>(dim) - 1.0) * delta * delta;
}

struct BoundSweep {
  std::vector<double> deltas;
  std::vector<double> c_bar;
  std::vector<double> bound;
  std::vector<bool> holds;
  std::vector<Eigen::Index> krylov_dim;
  /// Largest delta such that the bound holds at it and at every smaller grid
  /// point; negative if it fails at the first point.
  double largest_delta_holding = -1.0;
  std::string model_tag;

  bool all_hold() const { return std::all_of(holds.begin(), holds.end(), [](bool h) { return h; }); }
};

inline BoundSweep run_bound_sweep(const Hamiltonian& h, const SpectralData& spec, Eigen::Index j,
                                  const TildeProfile& profile, const std::vector<double>& deltas,
                                  const LanczosOptions& opts = {}) {
  require(!deltas.empty(), "delta grid is empty");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    require(deltas[i] >= 0.0, "deltas must be >= 0");
    if (i > 0) require(deltas[i] > deltas[i - 1], "deltas must be strictly increasing");
  }
  BoundSweep out;
  out.deltas = deltas;
  bool prefix_ok = true;
  for (double delta : deltas) {
    const auto psi = state_perturbed(spec, j, profile, delta);
    const auto lan = lanczos_full_orth(h, spec, psi, opts);
    const auto sat = saturation(spec, lan, psi, opts.allow_degenerate);
    const double bound = bound_rhs(spec.dim(), delta);
    const bool holds = sat.c_bar <= bound;
    out.c_bar.push_back(sat.c_bar);
    out.bound.push_back(bound);
    out.holds.push_back(holds);
    out.krylov_dim.push_back(lan.krylov_dim());
    prefix_ok = prefix_ok && holds;
    if (prefix_ok) out.largest_delta_holding = delta;
  }
  return out;
}

inline BoundSweep run_bound_sweep(const Hamiltonian& h, Eigen::Index j, const TildeProfile& profile,
                                  const std::vector<double>& deltas, const LanczosOptions& opts = {}) {
  return run_bound_sweep(h, eigendecompose(h), j, profile, deltas, opts);
}

/// Log-log fit of |<K_n|e_j>|^2 against delta for one Krylov index.
struct OverlapFit {
  Eigen::Index n = 0;
  double slope = 0.0;
  double intercept = 0.0;  // ln f_n
  int points = 0;
  bool included = false;   // fewer than two usable points -> excluded
  double f() const { return std::exp(intercept); }
};

struct ScalingReport {
  std::vector<double> deltas;
  std::vector<OverlapFit> fits;  // n = 0 .. K-1
  double median_slope = 0.0;     // over included n >= 1
  double sum_f = 0.0;            // sum of f_n over included n >= 1
};

/// Overlaps below this are treated as numerically zero.
inline constexpr double kOverlapFloor = 1e-14;

inline ScalingReport overlap_scaling_check(const Hamiltonian& h, const SpectralData& spec, Eigen::Index j,
                                           const TildeProfile& profile,
                                           const std::vector<double>& delta_grid,
                                           const LanczosOptions& opts = {}) {
  require(delta_grid.size() >= 4, "scaling check needs at least four deltas");
  for (double d : delta_grid) require(d > 0.0 && d <= 0.05, "scaling deltas must lie in (0, 0.05]");

  // overlap2[g][n] = |<K_n|e_j>|^2 at delta_grid[g]
  std::vector<Vector> overlap2;
  Eigen::Index k_min = spec.dim();
  for (double delta : delta_grid) {
    const auto psi = state_perturbed(spec, j, profile, delta);
    const auto lan = lanczos_full_orth(h, spec, psi, opts);
    overlap2.push_back((lan.basis.transpose() * spec.eigenvectors.col(j)).cwiseAbs2());
    k_min = std::min(k_min, lan.krylov_dim());
  }

  ScalingReport out;
  out.deltas = delta_grid;
  std::vector<double> slopes;
  for (Eigen::Index n = 0; n < k_min; ++n) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t g = 0; g < delta_grid.size(); ++g) {
      const double ov = overlap2[g](n);
      if (ov < kOverlapFloor) continue;
      const double x = std::log(delta_grid[g]);
      const double y = std::log(ov);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
      ++m;
    }
    OverlapFit fit;
    fit.n = n;
    fit.points = m;
    if (m >= 2) {
      const double denom = m * sxx - sx * sx;
      fit.slope = (m * sxy - sx * sy) / denom;
      fit.intercept = (sy - fit.slope * sx) / m;
      fit.included = true;
      if (n >= 1) {
        slopes.push_back(fit.slope);
        out.sum_f += fit.f();
      }
    }
    out.fits.push_back(fit);
  }
  if (!slopes.empty()) {
    std::sort(slopes.begin(), slopes.end());
    const std::size_t mid = slopes.size() / 2;
    out.median_slope = slopes.size() % 2 ? slopes[mid] : 0.5 * (slopes[mid - 1] + slopes[mid]);
  }
  return out;
}

/// Six log-spaced deltas in [0.005, 0.05].
inline std::vector<double> default_scaling_deltas() {
  std::vector<double> d;
  for (int i = 0; i < 6; ++i) d.push_back(0.005 * std::pow(10.0, i / 5.0));
  return d;
}

}  // namespace krylovchaos
