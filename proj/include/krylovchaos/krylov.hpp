#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "hamiltonians.hpp"
#include "states.hpp"

namespace krylovchaos {

struct LanczosOptions {
  /// Halting threshold on b_{n+1}, relative to the spectral scale.
  double b_tol = 1e-12;
  /// Maximum tolerated |B^H B - I| entry after reorthogonalization.
  double ortho_tol = 1e-10;
  bool allow_degenerate = false;
  /// Overrides the spectral scale (otherwise the Gershgorin range, or the
  /// exact range when a SpectralData is supplied).
  std::optional<double> spectral_scale;
};

/// Lanczos coefficients and Krylov basis of one (H, psi0) pair.
///
/// `a` holds a_0..a_{K-1}; `b` holds b_1..b_{K-1} (b_0 = 0 is implicit), so
/// b(n) is the coupling between Krylov vectors n and n+1.
template <class Scalar>
struct LanczosResult {
  Vector a;
  Vector b;
  MatrixOf<Scalar> basis;  // D x K, columns |K_n>
  bool halted_early = false;
  /// When halted early: the n for which b_n dropped below tolerance (== K).
  Eigen::Index halt_index = 0;
  /// The rejected b value at halt (0 if the recursion ran to K = D).
  double halt_b = 0.0;
  double spectral_scale = 1.0;
  double orthogonality_error = 0.0;

  Eigen::Index krylov_dim() const { return a.size(); }
  Eigen::Index dim() const { return basis.rows(); }
};

template <class Scalar>
double orthogonality_error(const MatrixOf<Scalar>& basis) {
  const auto k = basis.cols();
  MatrixOf<Scalar> gram = basis.adjoint() * basis;
  gram -= MatrixOf<Scalar>::Identity(k, k);
  return gram.cwiseAbs().maxCoeff();
}

/// Lanczos recursion with full reorthogonalization: every new candidate
/// vector is projected out of all previous Krylov vectors with two classical
/// Gram-Schmidt passes before b_{n+1} is measured.
template <class Scalar>
LanczosResult<Scalar> lanczos_full_orth(const Hamiltonian& h, const BasicStateVector<Scalar>& psi0,
                                        const LanczosOptions& opts = {}) {
  const Eigen::Index d = h.dim();
  require(psi0.basis == BasisTag::working, "Lanczos needs the initial state in the working basis");
  require(psi0.dim() == d, "initial state length " + std::to_string(psi0.dim()) +
                               " does not match Hamiltonian dimension " + std::to_string(d));
  const double norm = psi0.amplitudes.norm();
  if (std::abs(norm - 1.0) > 1e-10)
    throw ArgumentError("initial state is not normalized (norm " + std::to_string(norm) + ")");

  LanczosResult<Scalar> out;
  out.spectral_scale = opts.spectral_scale.value_or(h.gershgorin_range());
  if (!(out.spectral_scale > 0.0)) out.spectral_scale = 1.0;
  const double b_floor = opts.b_tol * out.spectral_scale;

  const MatrixOf<Scalar> hs = h.matrix().template cast<Scalar>();
  MatrixOf<Scalar> basis(d, d);
  std::vector<double> a;
  std::vector<double> b;
  a.reserve(static_cast<std::size_t>(d));
  b.reserve(static_cast<std::size_t>(d));

  basis.col(0) = psi0.amplitudes;
  VectorOf<Scalar> w(d);
  VectorOf<Scalar> proj;
  Eigen::Index k = 1;
  for (Eigen::Index n = 0;; ++n) {
    w.noalias() = hs * basis.col(n);
    const double an = std::real(basis.col(n).dot(w));
    a.push_back(an);
    w -= Scalar(an) * basis.col(n);
    if (n > 0) w -= Scalar(b.back()) * basis.col(n - 1);
    for (int pass = 0; pass < 2; ++pass) {
      proj.noalias() = basis.leftCols(n + 1).adjoint() * w;
      w.noalias() -= basis.leftCols(n + 1) * proj;
    }
    k = n + 1;
    if (k == d) break;
    const double bn = w.norm();
    if (bn < b_floor) {
      out.halted_early = true;
      out.halt_index = k;
      out.halt_b = bn;
      break;
    }
    b.push_back(bn);
    basis.col(k) = w / Scalar(bn);
  }

  out.a = Eigen::Map<const Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
  out.b = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
  out.basis = basis.leftCols(k);
  out.orthogonality_error = orthogonality_error<Scalar>(out.basis);
  if (out.orthogonality_error > opts.ortho_tol) {
    std::ostringstream msg;
    msg << "Lanczos lost orthogonality: max |B^H B - I| = " << out.orthogonality_error
        << " > " << opts.ortho_tol;
    throw NumericalError(msg.str());
  }
  return out;
}

/// Overload that refuses flagged spectra and uses the exact spectral range.
template <class Scalar>
LanczosResult<Scalar> lanczos_full_orth(const Hamiltonian& h, const SpectralData& spec,
                                        const BasicStateVector<Scalar>& psi0,
                                        LanczosOptions opts = {}) {
  if (spec.near_degenerate && !opts.allow_degenerate)
    throw DegenerateSpectrumError("spectrum is (near-)degenerate: min spacing " +
                                  std::to_string(spec.min_spacing) +
                                  "; pass allow_degenerate to override");
  if (!opts.spectral_scale) opts.spectral_scale = spec.scale();
  return lanczos_full_orth(h, psi0, opts);
}

/// <K_n|e_i>, a K x D matrix.
template <class Scalar>
MatrixOf<Scalar> krylov_eigen_overlaps(const SpectralData& spec, const LanczosResult<Scalar>& lan) {
  require(lan.dim() == spec.dim(), "Krylov basis and spectrum dimensions differ");
  return lan.basis.adjoint() * spec.eigenvectors.template cast<Scalar>();
}

/// Eigenvalues of the K x K tridiagonal matrix tridiag(b, a, b), ascending.
template <class Scalar>
Vector tridiagonal_spectrum(const LanczosResult<Scalar>& lan) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  solver.computeFromTridiagonal(lan.a, lan.b, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver failed");
  return solver.eigenvalues();
}

/// Residuals of the structural identities a Krylov basis must satisfy.
struct StructuralReport {
  double orthogonality = 0.0;      // max |B^H B - I|
  double off_band = 0.0;           // max |<K_m|H|K_n>|, |m - n| >= 2
  double coefficient_mismatch = 0.0;  // diag vs a_n, first off-diagonal vs b_{n+1}
  double spectrum_mismatch = 0.0;  // eig(tridiag) vs eig(H); only meaningful when K = D
  double eigvec_recursion = 0.0;   // tight-binding relation of <K_n|e_i>
  bool full_dimension = false;     // K == D
  double spectral_scale = 1.0;
};

template <class Scalar>
StructuralReport structural_check(const Hamiltonian& h, const SpectralData& spec,
                                  const LanczosResult<Scalar>& lan) {
  StructuralReport r;
  r.spectral_scale = spec.scale();
  r.orthogonality = orthogonality_error<Scalar>(lan.basis);
  const Eigen::Index k = lan.krylov_dim();
  r.full_dimension = k == spec.dim();

  const MatrixOf<Scalar> t = lan.basis.adjoint() * (h.matrix().template cast<Scalar>() * lan.basis);
  for (Eigen::Index n = 0; n < k; ++n) {
    r.coefficient_mismatch = std::max(r.coefficient_mismatch, std::abs(t(n, n) - Scalar(lan.a(n))));
    if (n + 1 < k)
      r.coefficient_mismatch =
          std::max(r.coefficient_mismatch, std::abs(t(n, n + 1) - Scalar(lan.b(n))));
    for (Eigen::Index m = n + 2; m < k; ++m)
      r.off_band = std::max({r.off_band, std::abs(t(n, m)), std::abs(t(m, n))});
  }

  if (r.full_dimension) {
    r.spectrum_mismatch = (tridiagonal_spectrum(lan) - spec.eigenvalues).cwiseAbs().maxCoeff();
  } else {
    r.spectrum_mismatch = std::numeric_limits<double>::infinity();
  }

  // e_i eps_n = a_n eps_n + b_n eps_{n-1} + b_{n+1} eps_{n+1}, eps_n = <K_n|e_i>.
  const MatrixOf<Scalar> eps = krylov_eigen_overlaps(spec, lan);
  for (Eigen::Index i = 0; i < spec.dim(); ++i) {
    for (Eigen::Index n = 0; n < k; ++n) {
      Scalar rhs = Scalar(lan.a(n)) * eps(n, i);
      if (n > 0) rhs += Scalar(lan.b(n - 1)) * eps(n - 1, i);
      if (n + 1 < k) rhs += Scalar(lan.b(n)) * eps(n + 1, i);
      r.eigvec_recursion =
          std::max(r.eigvec_recursion, std::abs(Scalar(spec.eigenvalues(i)) * eps(n, i) - rhs));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Evolution in the Krylov chain
// ---------------------------------------------------------------------------

namespace detail {

template <class Scalar>
void check_same_problem(const SpectralData& spec, const LanczosResult<Scalar>& lan,
                        const BasicStateVector<Scalar>& psi0) {
  if (spec.dim() != lan.dim() || psi0.dim() != spec.dim() || spec.eigenvectors.cols() != spec.dim())
    throw ArgumentError("spectrum, Krylov basis and initial state do not share a dimension");
  require(psi0.basis == BasisTag::working, "initial state must be in the working basis");
}

}  // namespace detail

/// psi_n(t) = sum_i exp(-i e_i t) <K_n|e_i> <e_i|psi0>, as a K x T matrix.
template <class Scalar>
ComplexMatrix krylov_amplitudes(const SpectralData& spec, const LanczosResult<Scalar>& lan,
                                const BasicStateVector<Scalar>& psi0, const std::vector<double>& times) {
  detail::check_same_problem(spec, lan, psi0);
  const ComplexMatrix overlaps = krylov_eigen_overlaps(spec, lan).template cast<Complex>();
  const ComplexVector c =
      spec.eigenvectors.transpose().template cast<Complex>() * psi0.amplitudes.template cast<Complex>();
  ComplexMatrix out(lan.krylov_dim(), static_cast<Eigen::Index>(times.size()));
  ComplexVector phased(spec.dim());
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    for (Eigen::Index i = 0; i < spec.dim(); ++i)
      phased(i) = std::polar(1.0, -spec.eigenvalues(i) * times[ti]) * c(i);
    out.col(static_cast<Eigen::Index>(ti)).noalias() = overlaps * phased;
  }
  return out;
}

struct TightBindingTrajectory {
  std::vector<double> times;
  ComplexMatrix amplitudes;  // K x T
  double max_norm_drift = 0.0;
};

/// Integrates i d/dt psi_n = a_n psi_n + b_n psi_{n-1} + b_{n+1} psi_{n+1}
/// from psi_n(0) = delta_{n0} with classical fixed-step RK4. Samples are kept
/// every `stride` steps (the final time is always kept).
template <class Scalar>
TightBindingTrajectory tight_binding_propagate(const LanczosResult<Scalar>& lan, double t_max, double dt,
                                               int stride = 1) {
  require(dt > 0.0 && t_max >= 0.0 && stride >= 1, "tight_binding_propagate: bad time grid");
  const Eigen::Index k = lan.krylov_dim();
  const auto apply = [&](const ComplexVector& psi) {
    ComplexVector out(k);
    for (Eigen::Index n = 0; n < k; ++n) {
      Complex v = lan.a(n) * psi(n);
      if (n > 0) v += lan.b(n - 1) * psi(n - 1);
      if (n + 1 < k) v += lan.b(n) * psi(n + 1);
      out(n) = Complex(0.0, -1.0) * v;
    }
    return out;
  };

  const auto steps = static_cast<long>(std::ceil(t_max / dt - 1e-9));
  TightBindingTrajectory traj;
  std::vector<ComplexVector> samples;
  ComplexVector psi = ComplexVector::Zero(k);
  psi(0) = 1.0;
  traj.times.push_back(0.0);
  samples.push_back(psi);
  for (long s = 1; s <= steps; ++s) {
    const ComplexVector k1 = apply(psi);
    const ComplexVector k2 = apply(psi + 0.5 * dt * k1);
    const ComplexVector k3 = apply(psi + 0.5 * dt * k2);
    const ComplexVector k4 = apply(psi + dt * k3);
    psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double drift = std::abs(psi.squaredNorm() - 1.0);
    traj.max_norm_drift = std::max(traj.max_norm_drift, drift);
    if (drift > 1e-6) {
      double range = 0.0;
      for (Eigen::Index n = 0; n < k; ++n) {
        const double r = (n > 0 ? lan.b(n - 1) : 0.0) + (n + 1 < k ? lan.b(n) : 0.0);
        range = std::max(range, std::abs(lan.a(n)) + r);
      }
      std::ostringstream msg;
      msg << "RK4 norm drift " << drift << " exceeds 1e-6 at t = " << s * dt
          << "; try dt <= " << 0.05 / (2.0 * range);
      throw NumericalError(msg.str());
    }
    if (s % stride == 0 || s == steps) {
      traj.times.push_back(s * dt);
      samples.push_back(psi);
    }
  }
  traj.amplitudes.resize(k, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) traj.amplitudes.col(static_cast<Eigen::Index>(i)) = samples[i];
  return traj;
}

struct ComplexityCurve {
  std::vector<double> times;
  std::vector<double> values;
};

/// C_K(t) = sum_n n |psi_n(t)|^2 for each column of a K x T amplitude matrix.
inline ComplexityCurve complexity_curve(const ComplexMatrix& psi, const std::vector<double>& times) {
  require(psi.cols() == static_cast<Eigen::Index>(times.size()), "amplitude columns must match times");
  const Vector positions = Vector::LinSpaced(psi.rows(), 0.0, static_cast<double>(psi.rows() - 1));
  ComplexityCurve curve{times, std::vector<double>(times.size())};
  for (Eigen::Index t = 0; t < psi.cols(); ++t)
    curve.values[static_cast<std::size_t>(t)] = positions.dot(psi.col(t).cwiseAbs2());
  return curve;
}

/// Same as complexity_curve(krylov_amplitudes(...)) without storing the
/// K x T amplitude matrix; meant for long dense time grids.
template <class Scalar>
ComplexityCurve complexity_spectral(const SpectralData& spec, const LanczosResult<Scalar>& lan,
                                    const BasicStateVector<Scalar>& psi0, const std::vector<double>& times) {
  detail::check_same_problem(spec, lan, psi0);
  const ComplexMatrix overlaps = krylov_eigen_overlaps(spec, lan).template cast<Complex>();
  const ComplexVector c =
      spec.eigenvectors.transpose().template cast<Complex>() * psi0.amplitudes.template cast<Complex>();
  const Vector positions =
      Vector::LinSpaced(lan.krylov_dim(), 0.0, static_cast<double>(lan.krylov_dim() - 1));
  ComplexityCurve curve{times, std::vector<double>(times.size())};
  ComplexVector phased(spec.dim());
  ComplexVector amp(lan.krylov_dim());
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    for (Eigen::Index i = 0; i < spec.dim(); ++i)
      phased(i) = std::polar(1.0, -spec.eigenvalues(i) * times[ti]) * c(i);
    amp.noalias() = overlaps * phased;
    curve.values[ti] = positions.dot(amp.cwiseAbs2());
  }
  return curve;
}

/// Long-time saturation of the complexity and the transition weights Q_0n.
struct SaturationReport {
  double c_bar = 0.0;
  double c_bar_normalized = 0.0;  // c_bar / ((D - 1) / 2)
  Vector q0n;                     // length D, zero beyond the Krylov dimension
};

template <class Scalar>
SaturationReport saturation(const SpectralData& spec, const LanczosResult<Scalar>& lan,
                            const BasicStateVector<Scalar>& psi0, bool allow_degenerate = false) {
  detail::check_same_problem(spec, lan, psi0);
  if (spec.near_degenerate && !allow_degenerate)
    throw DegenerateSpectrumError("saturation formula requires a nondegenerate spectrum");
  const Vector weights =
      (spec.eigenvectors.transpose().template cast<Scalar>() * psi0.amplitudes).cwiseAbs2();
  const Matrix overlap2 = krylov_eigen_overlaps(spec, lan).cwiseAbs2();
  SaturationReport r;
  r.q0n = Vector::Zero(spec.dim());
  r.q0n.head(lan.krylov_dim()) = overlap2 * weights;
  for (Eigen::Index n = 1; n < r.q0n.size(); ++n) r.c_bar += static_cast<double>(n) * r.q0n(n);
  const double delocalized = 0.5 * static_cast<double>(spec.dim() - 1);
  r.c_bar_normalized = delocalized > 0.0 ? r.c_bar / delocalized : 0.0;
  return r;
}

/// Trapezoidal (1/T) int_0^T C_K(t) dt. If `max_frequency` (the largest
/// eigenvalue difference) is given, warns when the grid under-resolves it.
inline double time_average_complexity(const ComplexityCurve& curve, double T,
                                      std::optional<double> max_frequency = std::nullopt) {
  require(T > 0.0, "averaging window must be positive");
  const auto& t = curve.times;
  const auto& c = curve.values;
  require(t.size() == c.size() && t.size() >= 2, "curve needs at least two samples");
  require(t.front() <= 0.0 + 1e-15, "curve must start at t = 0");
  require(t.back() >= T * (1.0 - 1e-12), "curve does not reach the averaging window");
  double integral = 0.0;
  double max_step = 0.0;
  for (std::size_t i = 1; i < t.size() && t[i - 1] < T; ++i) {
    const double t1 = std::min(t[i], T);
    double c1 = c[i];
    if (t[i] > T) c1 = c[i - 1] + (c[i] - c[i - 1]) * (T - t[i - 1]) / (t[i] - t[i - 1]);
    integral += 0.5 * (c[i - 1] + c1) * (t1 - t[i - 1]);
    max_step = std::max(max_step, t[i] - t[i - 1]);
  }
  if (max_frequency && max_step * *max_frequency > std::numbers::pi / 4.0) {
    std::ostringstream msg;
    msg << "time grid under-samples the fastest phase: step " << max_step << " vs frequency "
        << *max_frequency;
    warn(msg.str());
  }
  return integral / T;
}

/// 0, then log-spaced points up to the Heisenberg time 2*pi/(mean spacing),
/// then linear points up to ten Heisenberg times.
inline std::vector<double> default_time_grid(const SpectralData& spec, int log_points = 200,
                                             int linear_points = 200) {
  const double range = spec.scale();
  const double mean_spacing = spec.dim() > 1 ? range / static_cast<double>(spec.dim() - 1) : range;
  const double t_h = 2.0 * std::numbers::pi / mean_spacing;
  const double t0 = 1e-2 / range;
  std::vector<double> grid{0.0};
  for (int i = 0; i < log_points; ++i)
    grid.push_back(t0 * std::pow(t_h / t0, static_cast<double>(i) / std::max(1, log_points - 1)));
  for (int i = 1; i <= linear_points; ++i) grid.push_back(t_h + 9.0 * t_h * i / linear_points);
  return grid;
}

}  // namespace krylovchaos
