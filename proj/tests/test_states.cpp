#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "krylovchaos/hamiltonians.hpp"
#include "krylovchaos/states.hpp"

using namespace krylovchaos;

namespace {

SpectralData diagonal_spectrum(std::initializer_list<double> values) {
  Vector d(static_cast<Eigen::Index>(values.size()));
  std::copy(values.begin(), values.end(), d.data());
  return eigendecompose(Hamiltonian::from_matrix(d.asDiagonal()));
}

}  // namespace

TEST(AllUp, TwoSpinEvenBasis) {
  const auto psi = state_all_up(parity_basis(2, Sector::even));
  EXPECT_EQ(psi.amplitudes, (Vector(3) << 1, 0, 0).finished());
}

TEST(AllUp, EmbedsOntoComputationalAllUp) {
  const auto basis = parity_basis(10, Sector::even);
  const auto psi = state_all_up(basis);
  EXPECT_NEAR(psi.norm(), 1.0, 1e-12);
  const Vector full = basis.embed(psi.amplitudes);
  EXPECT_EQ(full(0), 1.0);
  EXPECT_NEAR(full.norm(), 1.0, 1e-15);
}

TEST(AllUp, OddSectorRejected) {
  EXPECT_THROW(state_all_up(parity_basis(4, Sector::odd)), ArgumentError);
}

TEST(Uniform, TwoLevelEigenbasisAmplitudes) {
  const auto spec = diagonal_spectrum({0.0, 1.0});
  const auto eig = to_eigenbasis(spec, state_uniform_eigenbasis(spec));
  EXPECT_NEAR(eig.amplitudes(0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(eig.amplitudes(1), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Uniform, EqualWeightsOnEveryEigenstate) {
  const auto spec = eigendecompose(build_goe(50, 2));
  const auto psi = state_uniform_eigenbasis(spec);
  EXPECT_NEAR(psi.norm(), 1.0, 1e-12);
  const Vector w = to_eigenbasis(spec, psi).amplitudes.cwiseAbs2();
  EXPECT_LE((w.array() - 1.0 / 50).abs().maxCoeff(), 1e-14);
}

TEST(Random, UnitNormAndDeterministic) {
  for (std::uint64_t seed : {0ULL, 1ULL, 12345ULL}) {
    const auto psi = state_random(300, seed);
    EXPECT_NEAR(psi.norm(), 1.0, 1e-12);
    EXPECT_EQ(psi.amplitudes, state_random(300, seed).amplitudes);
  }
}

TEST(Random, DistinctSeedsAreNearlyOrthogonal) {
  const Eigen::Index d = 1024;
  const double limit = 5.0 / std::sqrt(static_cast<double>(d));
  for (std::uint64_t pair = 0; pair < 100; ++pair) {
    const auto a = state_random(d, derive_seed(77, {pair, 0}));
    const auto b = state_random(d, derive_seed(77, {pair, 1}));
    EXPECT_LT(std::abs(a.amplitudes.dot(b.amplitudes)), limit);
  }
}

TEST(Random, MeanEigenWeightIsOneOverD) {
  const auto spec = eigendecompose(build_goe(64, 8));
  const Vector w = to_eigenbasis(spec, state_random(64, 3)).amplitudes.cwiseAbs2();
  EXPECT_NEAR(w.mean(), 1.0 / 64, 1e-15);
}

TEST(Eigenstate, PicksColumn) {
  const auto spec = diagonal_spectrum({1.0, 2.0, 3.0});
  const auto psi = state_eigenstate(spec, 0);
  EXPECT_EQ(psi.amplitudes.cwiseAbs(), (Vector(3) << 1, 0, 0).finished());
  EXPECT_THROW(state_eigenstate(spec, 3), ArgumentError);
  EXPECT_THROW(state_eigenstate(spec, -1), ArgumentError);
}

TEST(Perturbed, ZeroDeltaIsTheEigenstate) {
  const auto spec = eigendecompose(build_goe(20, 4));
  const auto a = state_perturbed(spec, 7, UniformComplement{}, 0.0);
  EXPECT_EQ(a.amplitudes, state_eigenstate(spec, 7).amplitudes);
}

TEST(Perturbed, EigenbasisModuliMatchClosedForm) {
  const auto spec = eigendecompose(build_ising_sector(9, 4.0, Sector::even));
  const Eigen::Index d = spec.dim();
  const double delta = 0.3;
  for (const TildeProfile& profile : {TildeProfile{GaussianProfile{61, 10}}, TildeProfile{UniformComplement{}}}) {
    const auto psi = state_perturbed(spec, 10, profile, delta);
    EXPECT_NEAR(psi.norm(), 1.0, 1e-12);
    const Vector w = to_eigenbasis(spec, psi).amplitudes.cwiseAbs2();
    EXPECT_NEAR(w(10), 1.0 / (1.0 + delta * delta), 1e-12);
    EXPECT_NEAR(w.sum() - w(10), delta * delta / (1.0 + delta * delta), 1e-12);

    // Independent profile oracle: Gaussian probability width sigma, or flat.
    double z = 0.0;
    Vector shape(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      shape(i) = std::holds_alternative<UniformComplement>(profile)
                     ? 1.0
                     : std::exp(-std::pow(static_cast<double>(i) - 61.0, 2) / (2.0 * 100.0));
      if (i == 10) shape(i) = 0.0;
      z += shape(i);
    }
    for (Eigen::Index i = 0; i < d; ++i)
      if (i != 10) EXPECT_NEAR(w(i), delta * delta / (1.0 + delta * delta) * shape(i) / z, 1e-12);
  }
}

TEST(Perturbed, ContinuousInDelta) {
  const auto spec = eigendecompose(build_goe(40, 9));
  double worst_ratio = 0.0;
  for (double d = 0.0; d < 0.2; d += 0.01) {
    const auto a = state_perturbed(spec, 3, UniformComplement{}, d);
    const auto b = state_perturbed(spec, 3, UniformComplement{}, d + 1e-4);
    worst_ratio = std::max(worst_ratio, (a.amplitudes - b.amplitudes).norm() / 1e-4);
  }
  EXPECT_LT(worst_ratio, 1.01);
}

TEST(Perturbed, Errors) {
  const auto spec = eigendecompose(build_goe(10, 1));
  EXPECT_THROW(state_perturbed(spec, 0, UniformComplement{}, -0.1), ArgumentError);
  const auto one = eigendecompose(Hamiltonian::from_matrix(Matrix::Constant(1, 1, 2.0)));
  EXPECT_THROW(state_perturbed(one, 0, UniformComplement{}, 0.1), ArgumentError);
  EXPECT_THROW(tilde_coefficients(5, 0, GaussianProfile{0.0, 0.0}), ArgumentError);
}

TEST(CenterStates, SmallCases) {
  const auto spec = diagonal_spectrum({0.0, 1.0, 2.0, 3.0, 4.0});
  EXPECT_EQ(select_center_states(spec, 1), std::vector<Eigen::Index>{2});
  EXPECT_EQ(select_center_states(spec, 5), (std::vector<Eigen::Index>{0, 1, 2, 3, 4}));
  EXPECT_EQ(select_center_states(spec, 2), (std::vector<Eigen::Index>{1, 2}));
}

TEST(CenterStates, SymmetricSpectrumOf528) {
  Vector e(528);
  for (int i = 0; i < 528; ++i) e(i) = std::sinh((i - 263.5) / 100.0);
  const auto spec = eigendecompose(Hamiltonian::from_matrix(e.asDiagonal()));
  std::vector<Eigen::Index> expected;
  for (Eigen::Index i = 244; i <= 283; ++i) expected.push_back(i);
  EXPECT_EQ(select_center_states(spec, 40), expected);
}

TEST(CenterStates, AgreesWithSortOracleOnIsing) {
  const auto spec = eigendecompose(build_ising_sector(10, 1.0, Sector::even));
  const auto d = spec.dim();
  std::vector<double> sorted(spec.eigenvalues.begin(), spec.eigenvalues.end());
  const double median = 0.5 * (sorted[d / 2 - 1] + sorted[d / 2]);
  std::vector<std::pair<double, Eigen::Index>> keyed;
  for (Eigen::Index i = 0; i < d; ++i) keyed.emplace_back(std::abs(spec.eigenvalues(i) - median), i);
  std::sort(keyed.begin(), keyed.end());
  std::vector<Eigen::Index> oracle;
  for (int i = 0; i < 40; ++i) oracle.push_back(keyed[i].second);
  std::sort(oracle.begin(), oracle.end());
  EXPECT_EQ(select_center_states(spec, 40), oracle);
}
