#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <variant>
#include <vector>

#include "core.hpp"
#include "hamiltonians.hpp"

namespace krylovchaos {

/// Which basis the amplitudes refer to: the Hamiltonian's working basis
/// (computational or parity-adapted) or its energy eigenbasis.
enum class BasisTag { working, eigen };

template <class Scalar>
struct BasicStateVector {
  VectorOf<Scalar> amplitudes;
  BasisTag basis = BasisTag::working;

  static constexpr double kNormTol = 1e-12;

  Eigen::Index dim() const { return amplitudes.size(); }
  double norm() const { return amplitudes.norm(); }
};

using StateVector = BasicStateVector<double>;
using ComplexStateVector = BasicStateVector<Complex>;

namespace detail {

template <class Scalar>
BasicStateVector<Scalar> normalized(VectorOf<Scalar> v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ArgumentError("cannot normalize a zero vector");
  return {v / n, BasisTag::working};
}

}  // namespace detail

/// Re-expresses a working-basis state in the energy eigenbasis.
template <class Scalar>
BasicStateVector<Scalar> to_eigenbasis(const SpectralData& spec, const BasicStateVector<Scalar>& psi) {
  require(psi.basis == BasisTag::working, "state is already in the eigenbasis");
  require(psi.dim() == spec.dim(), "state and spectrum dimensions differ");
  return {spec.eigenvectors.transpose().template cast<Scalar>() * psi.amplitudes, BasisTag::eigen};
}

inline StateVector state_all_up(const ParityBasis& basis) {
  if (basis.sector != Sector::even)
    throw ArgumentError("the all-up state is palindromic and lives in the even sector only");
  Vector v = Vector::Zero(basis.dim());
  v(basis.position[0]) = 1.0;
  return {v, BasisTag::working};
}

/// D^{-1/2} sum_i |e_i>, all phases +1, expressed in the working basis.
inline StateVector state_uniform_eigenbasis(const SpectralData& spec) {
  const auto d = spec.dim();
  require(d > 0, "empty spectrum");
  Vector coeffs = Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  return {spec.eigenvectors * coeffs, BasisTag::working};
}

/// Normalized real Gaussian vector; deterministic per seed.
inline StateVector state_random(Eigen::Index dim, std::uint64_t seed) {
  require(dim > 0, "state dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(rng);
  return detail::normalized<double>(std::move(v));
}

inline StateVector state_eigenstate(const SpectralData& spec, Eigen::Index j) {
  if (j < 0 || j >= spec.dim())
    throw ArgumentError("eigenstate index " + std::to_string(j) + " out of range [0, " +
                        std::to_string(spec.dim()) + ")");
  return {spec.eigenvectors.col(j), BasisTag::working};
}

/// Eigenbasis profile of the companion state |e~_j>.
struct GaussianProfile {
  double center = 0.0;
  double sigma = 1.0;  // width of the probability profile
};
struct UniformComplement {};
using TildeProfile = std::variant<GaussianProfile, UniformComplement>;

/// Eigenbasis coefficients of |e~_j>: unit norm, zero on index j.
inline Vector tilde_coefficients(Eigen::Index dim, Eigen::Index j, const TildeProfile& profile) {
  Vector c(dim);
  if (const auto* g = std::get_if<GaussianProfile>(&profile)) {
    require(g->sigma > 0.0, "gaussian profile needs sigma > 0");
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double x = static_cast<double>(i) - g->center;
      c(i) = std::exp(-x * x / (4.0 * g->sigma * g->sigma));
    }
  } else {
    c.setOnes();
  }
  c(j) = 0.0;
  const double n = c.norm();
  if (!(n > 0.0)) throw ArgumentError("perturbation profile is empty once index j is removed");
  return c / n;
}

/// (|e_j> + delta |e~_j>) / sqrt(1 + delta^2), in the working basis.
inline StateVector state_perturbed(const SpectralData& spec, Eigen::Index j,
                                   const TildeProfile& profile, double delta) {
  require(delta >= 0.0, "delta must be >= 0");
  if (j < 0 || j >= spec.dim()) throw ArgumentError("eigenstate index out of range");
  Vector coeffs = delta * tilde_coefficients(spec.dim(), j, profile);
  coeffs(j) = 1.0;
  coeffs /= std::sqrt(1.0 + delta * delta);
  return {spec.eigenvectors * coeffs, BasisTag::working};
}

/// The m eigen-indices closest to the median eigenvalue (ties: lower index),
/// returned in ascending order.
inline std::vector<Eigen::Index> select_center_states(const SpectralData& spec, Eigen::Index m) {
  const auto d = spec.dim();
  require(m >= 0 && m <= d, "requested more center states than the dimension");
  if (m == 0) return {};
  const auto& e = spec.eigenvalues;
  const double median = d % 2 == 1 ? e(d / 2) : 0.5 * (e(d / 2 - 1) + e(d / 2));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(e(a) - median) < std::abs(e(b) - median);
  });
  idx.resize(static_cast<std::size_t>(m));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace krylovchaos
