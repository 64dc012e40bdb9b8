#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "core.hpp"

namespace krylovchaos {

enum class Sector { full, even, odd };

inline std::string to_string(Sector s) {
  switch (s) {
    case Sector::full: return "full";
    case Sector::even: return "even";
    case Sector::odd: return "odd";
  }
  return "?";
}

struct IsingMeta {
  int n_spins = 0;
  double h_z = 0.0;
  Sector sector = Sector::full;
};

struct BandedMeta {
  int dim = 0;
  int bandwidth = 0;
  double k = 0.0;
  std::uint64_t seed = 0;
};

struct GoeMeta {
  int dim = 0;
  std::uint64_t seed = 0;
};

struct CustomMeta {};

using ModelMeta = std::variant<IsingMeta, BandedMeta, GoeMeta, CustomMeta>;

/// Largest chain length for which the dense 2^N matrix may be built.
inline constexpr int kMaxIsingSpins = 14;

/// Real symmetric dense Hamiltonian plus a descriptor of where it came from.
class Hamiltonian {
 public:
  static constexpr double kSymmetryTol = 1e-12;

  Hamiltonian() = default;

  /// Validates shape and symmetry; the stored matrix is exactly symmetrized.
  static Hamiltonian from_matrix(Matrix m, ModelMeta meta = CustomMeta{}) {
    require(m.rows() == m.cols() && m.rows() > 0, "Hamiltonian must be a non-empty square matrix");
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    require(asym <= kSymmetryTol, "Hamiltonian matrix is not symmetric (residual " +
                                      std::to_string(asym) + ")");
    Hamiltonian h;
    h.matrix_ = 0.5 * (m + m.transpose());
    h.meta_ = std::move(meta);
    return h;
  }

  const Matrix& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  const ModelMeta& meta() const { return meta_; }

  /// Gershgorin bound on (max eigenvalue - min eigenvalue).
  double gershgorin_range() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i = 0; i < dim(); ++i) {
      const double radius = matrix_.row(i).cwiseAbs().sum() - std::abs(matrix_(i, i));
      lo = std::min(lo, matrix_(i, i) - radius);
      hi = std::max(hi, matrix_(i, i) + radius);
    }
    return hi - lo;
  }

 private:
  Matrix matrix_;
  ModelMeta meta_ = CustomMeta{};
};

// ---------------------------------------------------------------------------
// Ising chain, open boundaries:
//   H = sum_i (sx_i + h_z sz_i) - sum_i sz_i sz_{i+1}
// Spin i (1-based) is bit (N - i) of the basis index; bit value 0 means up,
// so index 0 is the all-up state.
// ---------------------------------------------------------------------------

namespace detail {

inline void check_spin_count(int n_spins) {
  require(n_spins >= 1, "n_spins must be >= 1");
  if (n_spins > kMaxIsingSpins)
    throw ResourceError("n_spins = " + std::to_string(n_spins) + " exceeds the dense cap of " +
                        std::to_string(kMaxIsingSpins));
}

inline double ising_diagonal(std::uint32_t s, int n_spins, double h_z) {
  double e = 0.0;
  int prev = 0;
  for (int bit = n_spins - 1; bit >= 0; --bit) {
    const int z = ((s >> bit) & 1U) ? -1 : 1;
    e += h_z * z;
    if (bit != n_spins - 1) e -= prev * z;
    prev = z;
  }
  return e;
}

inline std::uint32_t reflect(std::uint32_t s, int n_spins) {
  std::uint32_t r = 0;
  for (int i = 0; i < n_spins; ++i)
    if ((s >> i) & 1U) r |= 1U << (n_spins - 1 - i);
  return r;
}

}  // namespace detail

inline Hamiltonian build_ising_full(int n_spins, double h_z) {
  detail::check_spin_count(n_spins);
  const std::uint32_t dim = 1U << n_spins;
  Matrix m = Matrix::Zero(dim, dim);
  for (std::uint32_t s = 0; s < dim; ++s) {
    m(s, s) = detail::ising_diagonal(s, n_spins, h_z);
    for (int bit = 0; bit < n_spins; ++bit) m(s ^ (1U << bit), s) = 1.0;
  }
  return Hamiltonian::from_matrix(std::move(m), IsingMeta{n_spins, h_z, Sector::full});
}

/// One symmetry-adapted basis element: |rep> for a palindrome, otherwise
/// (|rep> +- |partner>)/sqrt(2).
struct ParityState {
  std::uint32_t representative = 0;
  std::uint32_t partner = 0;
  bool palindrome = false;
};

/// Reflection-symmetric basis of one parity sector.
struct ParityBasis {
  int n_spins = 0;
  Sector sector = Sector::even;
  std::vector<ParityState> states;
  // Per computational state: sector index (or -1) and expansion coefficient.
  std::vector<std::int32_t> position;
  std::vector<double> coefficient;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(states.size()); }
  std::uint32_t full_dim() const { return 1U << n_spins; }

  /// Expands a sector vector into the full 2^N computational basis.
  template <class Derived>
  auto embed(const Eigen::MatrixBase<Derived>& v) const {
    using Scalar = typename Derived::Scalar;
    require(v.size() == dim(), "sector vector has wrong length");
    VectorOf<Scalar> out = VectorOf<Scalar>::Zero(full_dim());
    for (std::uint32_t s = 0; s < full_dim(); ++s)
      if (position[s] >= 0) out(s) = coefficient[s] * v(position[s]);
    return out;
  }
};

/// Even + odd dimensions add to 2^N; even = (2^N + 2^ceil(N/2)) / 2.
constexpr std::int64_t parity_sector_dim(int n_spins, Sector sector) {
  const std::int64_t full = std::int64_t{1} << n_spins;
  const std::int64_t palindromes = std::int64_t{1} << ((n_spins + 1) / 2);
  const std::int64_t even = (full + palindromes) / 2;
  return sector == Sector::even ? even : (sector == Sector::odd ? full - even : full);
}

inline ParityBasis parity_basis(int n_spins, Sector sector) {
  detail::check_spin_count(n_spins);
  require(sector != Sector::full, "parity_basis needs the even or odd sector");
  ParityBasis basis;
  basis.n_spins = n_spins;
  basis.sector = sector;
  const std::uint32_t full = 1U << n_spins;
  basis.position.assign(full, -1);
  basis.coefficient.assign(full, 0.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const double partner_sign = sector == Sector::even ? 1.0 : -1.0;
  for (std::uint32_t s = 0; s < full; ++s) {
    const std::uint32_t r = detail::reflect(s, n_spins);
    if (r < s) continue;
    const bool palindrome = r == s;
    if (palindrome && sector == Sector::odd) continue;
    const auto idx = static_cast<std::int32_t>(basis.states.size());
    basis.states.push_back({s, r, palindrome});
    basis.position[s] = idx;
    if (palindrome) {
      basis.coefficient[s] = 1.0;
    } else {
      basis.position[r] = idx;
      basis.coefficient[s] = inv_sqrt2;
      basis.coefficient[r] = partner_sign * inv_sqrt2;
    }
  }
  return basis;
}

/// Matrix of a full 2^N Ising Hamiltonian in a parity-adapted basis.
inline Hamiltonian project_to_sector(const Hamiltonian& h, const ParityBasis& basis) {
  if (h.dim() != static_cast<Eigen::Index>(basis.full_dim()))
    throw ArgumentError("project_to_sector: Hamiltonian dimension " + std::to_string(h.dim()) +
                        " does not match 2^" + std::to_string(basis.n_spins));
  const auto full = static_cast<Eigen::Index>(basis.full_dim());
  const Eigen::Index d = basis.dim();
  Matrix out = Matrix::Zero(d, d);
  Vector column(full);
  for (Eigen::Index c = 0; c < d; ++c) {
    const auto& st = basis.states[c];
    column = basis.coefficient[st.representative] * h.matrix().col(st.representative);
    if (!st.palindrome) column += basis.coefficient[st.partner] * h.matrix().col(st.partner);
    for (Eigen::Index u = 0; u < full; ++u) {
      const auto r = basis.position[u];
      if (r >= 0) out(r, c) += basis.coefficient[u] * column(u);
    }
  }
  ModelMeta meta = h.meta();
  if (auto* im = std::get_if<IsingMeta>(&meta)) im->sector = basis.sector;
  return Hamiltonian::from_matrix(0.5 * (out + out.transpose()), meta);
}

/// Builds the sector matrix directly from the operator action, without the
/// dense 2^N matrix.
inline Hamiltonian build_ising_sector(const ParityBasis& basis, double h_z) {
  const int n = basis.n_spins;
  const Eigen::Index d = basis.dim();
  Matrix out = Matrix::Zero(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const auto& st = basis.states[c];
    const std::uint32_t members[2] = {st.representative, st.partner};
    for (int m = 0; m < (st.palindrome ? 1 : 2); ++m) {
      const std::uint32_t t = members[m];
      const double ct = basis.coefficient[t];
      out(c, c) += ct * ct * detail::ising_diagonal(t, n, h_z);
      for (int bit = 0; bit < n; ++bit) {
        const std::uint32_t u = t ^ (1U << bit);
        const auto r = basis.position[u];
        if (r >= 0) out(r, c) += basis.coefficient[u] * ct;
      }
    }
  }
  return Hamiltonian::from_matrix(0.5 * (out + out.transpose()),
                                  IsingMeta{n, h_z, basis.sector});
}

inline Hamiltonian build_ising_sector(int n_spins, double h_z, Sector sector) {
  return build_ising_sector(parity_basis(n_spins, sector), h_z);
}

// ---------------------------------------------------------------------------
// Banded random model: H = (H0 + k V) / sqrt(1 + k^2).
// ---------------------------------------------------------------------------

/// The two independent random pieces of one banded-model realization.
struct BandedComponents {
  Vector h0;  // diagonal of H0
  Matrix v;   // symmetric banded perturbation
};

namespace detail {

inline Matrix draw_banded_symmetric(std::mt19937_64& rng, Eigen::Index dim, Eigen::Index bandwidth) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double diag_scale = std::sqrt(2.0);
  Matrix v = Matrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    v(i, i) = diag_scale * normal(rng);
    for (Eigen::Index j = i + 1; j <= std::min(dim - 1, i + bandwidth); ++j) {
      v(i, j) = normal(rng);
      v(j, i) = v(i, j);
    }
  }
  return v;
}

}  // namespace detail

inline BandedComponents banded_components(int dim, int bandwidth, std::uint64_t seed) {
  require(dim >= 2, "banded model needs dim >= 2");
  require(bandwidth >= 1 && bandwidth <= dim - 1,
          "bandwidth must lie in [1, dim-1], got " + std::to_string(bandwidth));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  BandedComponents c;
  c.h0.resize(dim);
  for (int i = 0; i < dim; ++i) c.h0(i) = normal(rng);
  c.v = detail::draw_banded_symmetric(rng, dim, bandwidth);
  return c;
}

inline Hamiltonian compose_banded(const BandedComponents& c, double k, int bandwidth,
                                  std::uint64_t seed) {
  require(k >= 0.0, "k must be >= 0");
  const auto dim = c.h0.size();
  Matrix m = (k / std::sqrt(1.0 + k * k)) * c.v;
  m.diagonal() += c.h0 / std::sqrt(1.0 + k * k);
  return Hamiltonian::from_matrix(std::move(m),
                                  BandedMeta{static_cast<int>(dim), bandwidth, k, seed});
}

inline Hamiltonian build_banded_random(int dim, int bandwidth, double k, std::uint64_t seed) {
  return compose_banded(banded_components(dim, bandwidth, seed), k, bandwidth, seed);
}

/// Bandwidth convention for the fraction-of-dimension parametrization.
inline int bandwidth_from_fraction(int dim, double frac) {
  const int b = static_cast<int>(std::lround(frac * dim));
  return std::clamp(b, 1, std::max(1, dim - 1));
}

/// Gaussian orthogonal ensemble: off-diagonal variance 1, diagonal variance 2.
inline Hamiltonian build_goe(int dim, std::uint64_t seed) {
  require(dim >= 1, "GOE dimension must be >= 1");
  std::mt19937_64 rng(seed);
  return Hamiltonian::from_matrix(detail::draw_banded_symmetric(rng, dim, dim - 1),
                                  GoeMeta{dim, seed});
}

// ---------------------------------------------------------------------------
// Spectral decomposition
// ---------------------------------------------------------------------------

struct SpectralData {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // column i pairs with eigenvalues(i)
  double min_spacing = std::numeric_limits<double>::infinity();
  bool near_degenerate = false;

  Eigen::Index dim() const { return eigenvalues.size(); }
  double range() const {
    return dim() > 0 ? eigenvalues(dim() - 1) - eigenvalues(0) : 0.0;
  }
  /// Scale used for relative tolerances; never zero.
  double scale() const {
    const double r = range();
    return r > 0.0 ? r : std::max(1.0, eigenvalues.cwiseAbs().maxCoeff());
  }
};

struct EigenOptions {
  /// Relative to the spectral range; spacing below this flags near-degeneracy.
  double degeneracy_rel_tol = 1e-10;
};

namespace detail {

inline void fill_spacing(SpectralData& s, const EigenOptions& opts) {
  for (Eigen::Index i = 1; i < s.dim(); ++i)
    s.min_spacing = std::min(s.min_spacing, s.eigenvalues(i) - s.eigenvalues(i - 1));
  s.near_degenerate = s.dim() > 1 && s.min_spacing < opts.degeneracy_rel_tol * s.scale();
}

}  // namespace detail

inline SpectralData eigendecompose(const Hamiltonian& h, const EigenOptions& opts = {}) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric eigensolver failed to converge");
  SpectralData s;
  s.eigenvalues = solver.eigenvalues();
  s.eigenvectors = solver.eigenvectors();
  detail::fill_spacing(s, opts);
  return s;
}

/// Eigenvalues only; eigenvectors is left empty.
inline SpectralData eigenvalues_only(const Hamiltonian& h, const EigenOptions& opts = {}) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric eigensolver failed to converge");
  SpectralData s;
  s.eigenvalues = solver.eigenvalues();
  detail::fill_spacing(s, opts);
  return s;
}

}  // namespace krylovchaos
