#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "krylovchaos/hamiltonians.hpp"
#include "krylovchaos/krylov.hpp"
#include "krylovchaos/states.hpp"

using namespace krylovchaos;
using namespace std::complex_literals;

namespace {

Hamiltonian two_level() {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 1) = 1.0;
  return Hamiltonian::from_matrix(m);
}

StateVector two_level_superposition() { return {Vector::Constant(2, 1.0 / std::sqrt(2.0)), BasisTag::working}; }

// Closed-form Krylov amplitudes of the two-level example.
Complex psi0_exact(double t) { return (1.0 + std::exp(-1i * t)) / 2.0; }
Complex psi1_exact(double t) { return (-1.0 + std::exp(-1i * t)) / 2.0; }

std::vector<double> uniform_times(double t_max, double dt) {
  std::vector<double> t;
  const auto n = static_cast<long>(std::ceil(t_max / dt - 1e-9));
  for (long i = 0; i <= n; ++i) t.push_back(static_cast<double>(i) * dt);
  return t;
}

Hamiltonian random_symmetric(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = normal(rng);
  return Hamiltonian::from_matrix(m);
}

}  // namespace

TEST(Lanczos, EigenstateHaltsImmediately) {
  const auto lan = lanczos_full_orth(two_level(), StateVector{Vector::Unit(2, 0), BasisTag::working});
  EXPECT_EQ(lan.krylov_dim(), 1);
  EXPECT_EQ(lan.a(0), 0.0);
  EXPECT_EQ(lan.b.size(), 0);
  EXPECT_TRUE(lan.halted_early);
  EXPECT_EQ(lan.halt_index, 1);
}

TEST(Lanczos, TwoLevelSuperposition) {
  const auto lan = lanczos_full_orth(two_level(), two_level_superposition());
  ASSERT_EQ(lan.krylov_dim(), 2);
  EXPECT_FALSE(lan.halted_early);
  EXPECT_NEAR(lan.a(0), 0.5, 1e-15);
  EXPECT_NEAR(lan.a(1), 0.5, 1e-15);
  ASSERT_EQ(lan.b.size(), 1);
  EXPECT_NEAR(lan.b(0), 0.5, 1e-15);
  EXPECT_NEAR(lan.basis(0, 1), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(lan.basis(1, 1), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Lanczos, TridiagonalSpectrumMatchesFullSpectrum) {
  const auto h = build_goe(80, 21);
  const auto spec = eigendecompose(h);
  const auto lan = lanczos_full_orth(h, spec, state_random(80, 4));
  ASSERT_EQ(lan.krylov_dim(), 80);
  EXPECT_LE((tridiagonal_spectrum(lan) - spec.eigenvalues).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Lanczos, StructuralInvariantsOnIsing) {
  for (double hz : {0.3, 1.02, 4.0}) {
    const auto h = build_ising_sector(8, hz, Sector::even);
    const auto spec = eigendecompose(h);
    const auto lan = lanczos_full_orth(h, spec, state_all_up(parity_basis(8, Sector::even)));
    const auto r = structural_check(h, spec, lan);
    EXPECT_TRUE(r.full_dimension) << "h_z=" << hz;
    EXPECT_LE(r.orthogonality, 1e-10);
    EXPECT_LE(r.off_band, 1e-8 * r.spectral_scale);
    EXPECT_LE(r.coefficient_mismatch, 1e-8 * r.spectral_scale);
    EXPECT_LE(r.spectrum_mismatch, 1e-8);
    EXPECT_LE(r.eigvec_recursion, 1e-8 * r.spectral_scale);
    for (Eigen::Index n = 0; n < lan.b.size(); ++n) EXPECT_GT(lan.b(n), 0.0);
  }
}

TEST(Lanczos, ComplexInitialStateKeepsRealCoefficients) {
  const auto h = build_goe(30, 3);
  const auto spec = eigendecompose(h);
  const auto real = state_random(30, 5);
  ComplexStateVector phased{real.amplitudes.cast<Complex>() * std::exp(0.7i), BasisTag::working};
  const auto lr = lanczos_full_orth(h, spec, real);
  const auto lc = lanczos_full_orth(h, spec, phased);
  EXPECT_LE((lr.a - lc.a).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((lr.b - lc.b).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lanczos, Errors) {
  const auto h = two_level();
  EXPECT_THROW(lanczos_full_orth(h, StateVector{Vector::Constant(2, 1.0), BasisTag::working}), ArgumentError);
  EXPECT_THROW(lanczos_full_orth(h, StateVector{Vector::Unit(3, 0), BasisTag::working}), ArgumentError);

  Matrix deg = Vector::Map(std::array{1.0, 1.0, 2.0}.data(), 3).asDiagonal();
  const auto hd = Hamiltonian::from_matrix(deg);
  const auto spec = eigendecompose(hd);
  const StateVector psi{Vector::Constant(3, 1.0 / std::sqrt(3.0)), BasisTag::working};
  EXPECT_THROW(lanczos_full_orth(hd, spec, psi), DegenerateSpectrumError);
  LanczosOptions opts;
  opts.allow_degenerate = true;
  const auto lan = lanczos_full_orth(hd, spec, psi, opts);
  EXPECT_EQ(lan.krylov_dim(), 2);  // the degenerate pair collapses to one direction
  EXPECT_TRUE(lan.halted_early);

  LanczosOptions strict;
  strict.ortho_tol = -1.0;  // unattainable
  EXPECT_THROW(lanczos_full_orth(build_goe(10, 1), state_random(10, 1), strict), NumericalError);
}

TEST(Amplitudes, LocalizedAtTimeZero) {
  const auto h = build_goe(25, 6);
  const auto spec = eigendecompose(h);
  const auto psi = state_random(25, 6);
  const auto lan = lanczos_full_orth(h, spec, psi);
  const ComplexMatrix amp = krylov_amplitudes(spec, lan, psi, {0.0});
  EXPECT_NEAR(std::abs(amp(0, 0) - 1.0), 0.0, 1e-12);
  EXPECT_LE(amp.col(0).tail(24).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Amplitudes, TwoLevelClosedForm) {
  const auto h = two_level();
  const auto spec = eigendecompose(h);
  const auto psi = two_level_superposition();
  const auto lan = lanczos_full_orth(h, spec, psi);
  const auto times = uniform_times(10.0, 0.25);
  const ComplexMatrix amp = krylov_amplitudes(spec, lan, psi, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_LE(std::abs(amp(0, i) - psi0_exact(times[i])), 1e-14);
    EXPECT_LE(std::abs(amp(1, i) - psi1_exact(times[i])), 1e-14);
  }
}

TEST(Amplitudes, UnitaryOnIsingSixSpins) {
  const auto h = build_ising_sector(6, 1.02, Sector::even);
  const auto spec = eigendecompose(h);
  const auto psi = state_all_up(parity_basis(6, Sector::even));
  const auto lan = lanczos_full_orth(h, spec, psi);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1e3);
  std::vector<double> times;
  for (int i = 0; i < 100; ++i) times.push_back(u(rng));
  const ComplexMatrix amp = krylov_amplitudes(spec, lan, psi, times);
  for (Eigen::Index t = 0; t < amp.cols(); ++t) EXPECT_NEAR(amp.col(t).squaredNorm(), 1.0, 1e-10);
}

TEST(TightBinding, TwoLevelClosedForm) {
  const auto lan = lanczos_full_orth(two_level(), two_level_superposition());
  const auto traj = tight_binding_propagate(lan, 10.0, 1e-3, 100);
  double err = 0.0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    err = std::max(err, std::abs(traj.amplitudes(0, i) - psi0_exact(traj.times[i])));
    err = std::max(err, std::abs(traj.amplitudes(1, i) - psi1_exact(traj.times[i])));
  }
  EXPECT_LT(err, 1e-6);
  EXPECT_LT(traj.max_norm_drift, 1e-6);
  EXPECT_NEAR(traj.times.back(), 10.0, 1e-9);
}

TEST(TightBinding, AgreesWithSpectralEvolutionOnIsing) {
  const auto h = build_ising_sector(6, 1.02, Sector::even);
  const auto spec = eigendecompose(h);
  const auto psi = state_all_up(parity_basis(6, Sector::even));
  const auto lan = lanczos_full_orth(h, spec, psi);
  const auto traj = tight_binding_propagate(lan, 10.0, 1e-3, 50);
  const ComplexMatrix spectral = krylov_amplitudes(spec, lan, psi, traj.times);
  EXPECT_LT((spectral - traj.amplitudes).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(TightBinding, OversizedStepIsReported) {
  const auto h = build_goe(20, 2);
  const auto lan = lanczos_full_orth(h, state_random(20, 2));
  try {
    tight_binding_propagate(lan, 5.0, 0.5);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("try dt"), std::string::npos);
  }
}

TEST(Complexity, TwoLevelCurve) {
  const auto h = two_level();
  const auto spec = eigendecompose(h);
  const auto psi = two_level_superposition();
  const auto lan = lanczos_full_orth(h, spec, psi);
  const std::vector<double> times{0.0, 0.5, std::numbers::pi, 4.0};
  const auto curve = complexity_curve(krylov_amplitudes(spec, lan, psi, times), times);
  const auto streamed = complexity_spectral(spec, lan, psi, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_NEAR(curve.values[i], (1.0 - std::cos(times[i])) / 2.0, 1e-14);
    EXPECT_NEAR(streamed.values[i], curve.values[i], 1e-14);
  }
  EXPECT_NEAR(curve.values[2], 1.0, 1e-14);
}

TEST(Complexity, BoundedByChainLength) {
  const auto h = build_goe(40, 12);
  const auto spec = eigendecompose(h);
  const auto psi = state_random(40, 12);
  const auto lan = lanczos_full_orth(h, spec, psi);
  const auto curve = complexity_spectral(spec, lan, psi, default_time_grid(spec));
  EXPECT_NEAR(curve.values.front(), 0.0, 1e-14);
  for (double c : curve.values) {
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, static_cast<double>(lan.krylov_dim() - 1));
  }
}

TEST(Saturation, EigenstateGivesZero) {
  const auto h = build_goe(30, 1);
  const auto spec = eigendecompose(h);
  const auto psi = state_eigenstate(spec, 11);
  const auto lan = lanczos_full_orth(h, spec, psi);
  EXPECT_EQ(lan.krylov_dim(), 1);
  const auto sat = saturation(spec, lan, psi);
  EXPECT_EQ(sat.c_bar, 0.0);
  EXPECT_NEAR(sat.q0n(0), 1.0, 1e-12);
}

TEST(Saturation, UniformStateGivesDelocalizedValue) {
  const auto h = build_goe(64, 2);
  const auto spec = eigendecompose(h);
  const auto psi = state_uniform_eigenbasis(spec);
  const auto lan = lanczos_full_orth(h, spec, psi);
  const auto sat = saturation(spec, lan, psi);
  EXPECT_NEAR(sat.c_bar, 31.5, 31.5 * 1e-8);
  EXPECT_NEAR(sat.c_bar_normalized, 1.0, 1e-8);
}

TEST(Saturation, TransitionWeightsSumToOne) {
  const auto h = build_ising_sector(7, 0.6, Sector::even);
  const auto spec = eigendecompose(h);
  const auto psi = state_all_up(parity_basis(7, Sector::even));
  const auto lan = lanczos_full_orth(h, spec, psi);
  const auto sat = saturation(spec, lan, psi);
  EXPECT_NEAR(sat.q0n.sum(), 1.0, 1e-10);
  EXPECT_GE(sat.q0n.minCoeff(), -1e-15);
  const Matrix overlap2 = krylov_eigen_overlaps(spec, lan).cwiseAbs2();
  EXPECT_LE((overlap2.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
}

TEST(Saturation, PhaseIndependence) {
  const int d = 48;
  const auto h = build_goe(d, 14);
  const auto spec = eigendecompose(h);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);

  // Uniform moduli with two independent random phase assignments.
  std::vector<double> c_bars;
  for (int rep = 0; rep < 2; ++rep) {
    ComplexVector coeffs(d);
    for (int i = 0; i < d; ++i) coeffs(i) = std::polar(1.0 / std::sqrt(double(d)), angle(rng));
    const ComplexStateVector psi{spec.eigenvectors.cast<Complex>() * coeffs, BasisTag::working};
    const auto lan = lanczos_full_orth(h, spec, psi);
    c_bars.push_back(saturation(spec, lan, psi).c_bar);
  }
  EXPECT_NEAR(c_bars[0], 0.5 * (d - 1), 1e-8 * d);
  EXPECT_NEAR(c_bars[0], c_bars[1], 1e-9);

  // Global phase on a random state, and sign flips of eigenvector columns.
  const auto real = state_random(d, 9);
  const auto lan_real = lanczos_full_orth(h, spec, real);
  const double reference = saturation(spec, lan_real, real).c_bar;
  const ComplexStateVector rotated{real.amplitudes.cast<Complex>() * std::exp(2.1i), BasisTag::working};
  EXPECT_NEAR(saturation(spec, lanczos_full_orth(h, spec, rotated), rotated).c_bar, reference, 1e-9);
  SpectralData flipped = spec;
  for (int i = 0; i < d; i += 3) flipped.eigenvectors.col(i) *= -1.0;
  EXPECT_NEAR(saturation(flipped, lanczos_full_orth(h, flipped, real), real).c_bar, reference, 1e-9);
}

TEST(Saturation, MatchesTimeAverageOnRandomThreeByThree) {
  const auto h = random_symmetric(3, 17);
  const auto spec = eigendecompose(h);
  const auto psi = state_random(3, 17);
  const auto lan = lanczos_full_orth(h, spec, psi);
  const double c_bar = saturation(spec, lan, psi).c_bar;
  const double mean_spacing = spec.range() / 2.0;
  const double T = 1e4 / mean_spacing;
  const double dt = 0.05 / spec.range();
  const auto curve = complexity_spectral(spec, lan, psi, uniform_times(T, dt));
  EXPECT_NEAR(time_average_complexity(curve, T, spec.range()), c_bar, 0.01 * c_bar);
}

TEST(Saturation, MatchesTimeAverageOnIsingSixSpins) {
  const auto h = build_ising_sector(6, 1.02, Sector::even);
  const auto spec = eigendecompose(h);
  const auto psi = state_all_up(parity_basis(6, Sector::even));
  const auto lan = lanczos_full_orth(h, spec, psi);
  const double c_bar = saturation(spec, lan, psi).c_bar;
  const double T = 1e3 * static_cast<double>(spec.dim()) / spec.range();
  const auto curve = complexity_spectral(spec, lan, psi, uniform_times(T, 0.5 / spec.range()));
  EXPECT_NEAR(time_average_complexity(curve, T, spec.range()), c_bar, 0.01 * c_bar);
}

TEST(TimeAverage, CosineCurve) {
  const double T = 2.0 * std::numbers::pi * 1000.0;
  ComplexityCurve curve;
  curve.times = uniform_times(T, 1e-3);
  for (double t : curve.times) curve.values.push_back((1.0 - std::cos(t)) / 2.0);
  EXPECT_NEAR(time_average_complexity(curve, T), 0.5, 1e-3);
}

TEST(TimeAverage, ConstantCurveAndInterpolatedEnd) {
  ComplexityCurve curve{{0.0, 1.0, 2.5, 4.0}, {3.0, 3.0, 3.0, 3.0}};
  EXPECT_DOUBLE_EQ(time_average_complexity(curve, 4.0), 3.0);
  ComplexityCurve ramp{{0.0, 2.0}, {0.0, 2.0}};
  EXPECT_NEAR(time_average_complexity(ramp, 1.0), 0.5, 1e-15);
}

TEST(TimeAverage, WarnsOnCoarseGrid) {
  std::vector<std::string> seen;
  auto saved = warning_sink();
  warning_sink() = [&](std::string_view m) { seen.emplace_back(m); };
  ComplexityCurve curve{{0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}};
  time_average_complexity(curve, 2.0, 10.0);
  warning_sink() = saved;
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_NE(seen[0].find("under-samples"), std::string::npos);
  EXPECT_THROW(time_average_complexity(curve, 3.0), ArgumentError);
}

TEST(TimeGrid, StartsAtZeroAndIncreases) {
  const auto spec = eigendecompose(build_goe(30, 4));
  const auto grid = default_time_grid(spec);
  EXPECT_EQ(grid.front(), 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_GT(grid[i], grid[i - 1]);
  EXPECT_EQ(grid.size(), 401u);
}
