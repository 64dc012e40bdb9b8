#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "../chaometrics.hpp"
#include "../hamiltonians.hpp"
#include "../krylov.hpp"
#include "../states.hpp"
#include "config.hpp"

namespace krylovchaos::harness {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Family-averaged quantities at one grid point.
struct FamilyValues {
  double c_bar_norm = kNaN;
  double inv_sigma_a = kNaN;
  double inv_sigma_b = kNaN;
  double inv_sigma_a_norm = kNaN;
  double inv_sigma_b_norm = kNaN;
  // Raw dispersions, averaged over members.
  double sigma_a = kNaN;
  double sigma_b = kNaN;
  double sigma_log_b = kNaN;
  Eigen::Index min_krylov_dim = 0;
  int members = 0;
};

struct SweepRecord {
  double param = 0.0;
  double eta = kNaN;
  std::vector<FamilyValues> families;  // same order as SweepResult::family_names
};

struct SweepResult {
  std::vector<std::string> family_names;
  std::vector<SweepRecord> records;
  std::vector<double> skipped;  // grid points dropped as degenerate
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers. The first exception
/// thrown by any task is rethrown after all workers join.
template <class Fn>
void parallel_for_index(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

namespace detail {

/// Lanczos + saturation + dispersions for one initial state.
struct MemberResult {
  double c_bar_norm = 0.0;
  double sigma_a = 0.0;
  double sigma_b = 0.0;
  double sigma_log_b = 0.0;
  Eigen::Index krylov_dim = 0;
};

inline MemberResult evaluate_member(const Hamiltonian& h, const SpectralData& spec, const StateVector& psi,
                                    const SweepConfig& cfg) {
  LanczosOptions opts;
  opts.allow_degenerate = cfg.allow_degenerate;
  const auto lan = lanczos_full_orth(h, spec, psi, opts);
  const auto sat = saturation(spec, lan, psi, cfg.allow_degenerate);
  MemberResult r;
  r.c_bar_norm = sat.c_bar_normalized;
  r.krylov_dim = lan.krylov_dim();
  const std::span<const double> a(lan.a.data(), static_cast<std::size_t>(lan.a.size()));
  const std::span<const double> b(lan.b.data(), static_cast<std::size_t>(lan.b.size()));
  // A chain shorter than the dispersion window (e.g. an eigenstate of H)
  // has no defined dispersion.
  r.sigma_a = r.sigma_b = r.sigma_log_b = kNaN;
  if (static_cast<double>(b.size()) * cfg.dispersion.w_frac < 1.0 - 1e-12) return r;
  r.sigma_a = sigma_moving(a, cfg.dispersion);
  r.sigma_b = sigma_moving(b, cfg.dispersion);
  // Same index range [n0, N-1-w] as the moving-average dispersion: skips the
  // initial ramp and the terminal descent of b_n.
  const auto win = resolve_window(b.size(), cfg.dispersion);
  const auto span = b.size() - win.n0 - win.w;
  if (span >= 4) r.sigma_log_b = sigma_log(b.subspan(win.n0, span));
  return r;
}

/// Family means; dispersion terms average over the members where they exist.
inline FamilyValues average(const std::vector<MemberResult>& members) {
  FamilyValues v;
  v.c_bar_norm = 0.0;
  v.min_krylov_dim = std::numeric_limits<Eigen::Index>::max();
  double inv_a = 0, inv_b = 0, sa = 0, sb = 0, sl = 0;
  int n_disp = 0, n_log = 0;
  for (const auto& m : members) {
    v.c_bar_norm += m.c_bar_norm;
    v.min_krylov_dim = std::min(v.min_krylov_dim, m.krylov_dim);
    if (std::isfinite(m.sigma_a) && std::isfinite(m.sigma_b)) {
      inv_a += 1.0 / m.sigma_a;
      inv_b += 1.0 / m.sigma_b;
      sa += m.sigma_a;
      sb += m.sigma_b;
      ++n_disp;
    }
    if (std::isfinite(m.sigma_log_b)) {
      sl += m.sigma_log_b;
      ++n_log;
    }
  }
  v.c_bar_norm /= static_cast<double>(members.size());
  if (n_disp > 0) {
    v.inv_sigma_a = inv_a / n_disp;
    v.inv_sigma_b = inv_b / n_disp;
    v.sigma_a = sa / n_disp;
    v.sigma_b = sb / n_disp;
  }
  if (n_log > 0) v.sigma_log_b = sl / n_log;
  v.members = static_cast<int>(members.size());
  return v;
}

/// States of a family built from a reference (or the current) spectrum.
inline std::vector<StateVector> spectral_family_states(const FamilySpec& fam, const SpectralData& basis_spec) {
  std::vector<StateVector> out;
  switch (fam.kind) {
    case FamilyKind::uniform:
      out.push_back(state_uniform_eigenbasis(basis_spec));
      break;
    case FamilyKind::eigenstates:
      for (auto j : select_center_states(basis_spec, std::min<Eigen::Index>(fam.count, basis_spec.dim())))
        out.push_back(state_eigenstate(basis_spec, j));
      break;
    case FamilyKind::border:
      out.push_back(state_eigenstate(basis_spec, 0));
      break;
    default:
      throw ArgumentError("family '" + fam.name + "' is not defined by a spectrum");
  }
  return out;
}

inline void warn_short_krylov(const FamilyValues& v, Eigen::Index dim, const std::string& fam, double param) {
  if (v.min_krylov_dim < dim) {
    std::ostringstream msg;
    msg << "family " << fam << " at param " << param << ": Krylov dimension " << v.min_krylov_dim
        << " < D = " << dim;
    warn(msg.str());
  }
}

inline void warn_skip(double param, const std::string& why) {
  std::ostringstream msg;
  msg << "skipping grid point " << param << ": " << why;
  warn(msg.str());
}

}  // namespace detail

/// Rescales every 1/sigma column onto the eta column of the same sweep.
/// With a single record the normalized value collapses to eta itself.
inline void postprocess_normalize(std::vector<SweepRecord>& records) {
  if (records.empty()) return;
  const std::size_t nf = records.front().families.size();
  const auto normalize_column = [&](std::size_t f, double FamilyValues::*raw, double FamilyValues::*norm) {
    // Grid points without a defined dispersion stay NaN and do not enter the fit.
    std::vector<std::size_t> idx;
    std::vector<double> x, eta;
    for (std::size_t i = 0; i < records.size(); ++i) {
      records[i].families[f].*norm = kNaN;
      const double v = records[i].families[f].*raw;
      if (!std::isfinite(v)) continue;
      idx.push_back(i);
      x.push_back(v);
      eta.push_back(records[i].eta);
    }
    if (idx.size() == 1) {
      records[idx[0]].families[f].*norm = records[idx[0]].eta;
      return;
    }
    if (idx.empty()) return;
    const auto xn = normalize_to_eta(x, eta);
    for (std::size_t i = 0; i < idx.size(); ++i) records[idx[i]].families[f].*norm = xn[i];
  };
  for (std::size_t f = 0; f < nf; ++f) {
    normalize_column(f, &FamilyValues::inv_sigma_a, &FamilyValues::inv_sigma_a_norm);
    normalize_column(f, &FamilyValues::inv_sigma_b, &FamilyValues::inv_sigma_b_norm);
  }
}

namespace detail {

inline SweepResult assemble(const SweepConfig& cfg, std::vector<std::optional<SweepRecord>>& slots) {
  SweepResult out;
  for (const auto& f : cfg.families) out.family_names.push_back(f.name);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) out.records.push_back(std::move(*slots[i]));
    else out.skipped.push_back(cfg.param_grid[i]);
  }
  postprocess_normalize(out.records);
  return out;
}

}  // namespace detail

/// Ising chain sweep over h_z.
inline SweepResult run_ising_sweep(SweepConfig cfg) {
  require(cfg.model == ModelKind::ising, "run_ising_sweep needs model = ising");
  apply_defaults(cfg);
  validate(cfg);
  require(cfg.sector != Sector::full, "Ising sweeps run in a parity sector");
  const auto basis = parity_basis(cfg.n_spins, cfg.sector);
  std::optional<ParityBasis> eta_basis;
  if (cfg.eta_spins() != cfg.n_spins) eta_basis = parity_basis(cfg.eta_spins(), cfg.sector);

  // Reference spectra are shared read-only across grid points.
  std::map<double, SpectralData> refs;
  for (const auto& f : cfg.families) {
    if (f.kind == FamilyKind::all_up)
      require(cfg.sector == Sector::even, "the all_up family needs the even sector");
    if (f.ref && !refs.count(*f.ref))
      refs.emplace(*f.ref, eigendecompose(build_ising_sector(basis, *f.ref)));
  }
  // Random states do not depend on the grid point.
  std::vector<std::vector<StateVector>> random_states(cfg.families.size());
  for (std::size_t f = 0; f < cfg.families.size(); ++f)
    if (cfg.families[f].kind == FamilyKind::random)
      for (int s = 0; s < cfg.families[f].count; ++s)
        random_states[f].push_back(state_random(basis.dim(), derive_seed(cfg.seed, {2, f, std::uint64_t(s)})));

  std::vector<std::optional<SweepRecord>> slots(cfg.param_grid.size());
  parallel_for_index(cfg.param_grid.size(), cfg.threads, [&](std::size_t gi) {
    const double hz = cfg.param_grid[gi];
    const auto h = build_ising_sector(basis, hz);
    const auto spec = eigendecompose(h);
    if (spec.near_degenerate && !cfg.allow_degenerate) {
      detail::warn_skip(hz, "near-degenerate spectrum");
      return;
    }
    SweepRecord rec;
    rec.param = hz;
    try {
      const Vector levels = eta_basis ? eigenvalues_only(build_ising_sector(*eta_basis, hz)).eigenvalues
                                      : spec.eigenvalues;
      rec.eta = eta(r_ratio_mean(levels));
    } catch (const DegenerateSpectrumError& e) {
      detail::warn_skip(hz, e.what());
      return;
    }
    for (std::size_t f = 0; f < cfg.families.size(); ++f) {
      const auto& fam = cfg.families[f];
      std::vector<StateVector> states;
      if (fam.kind == FamilyKind::all_up) states.push_back(state_all_up(basis));
      else if (fam.kind == FamilyKind::random) states = random_states[f];
      else states = detail::spectral_family_states(fam, fam.ref ? refs.at(*fam.ref) : spec);
      std::vector<detail::MemberResult> members;
      for (const auto& psi : states) members.push_back(detail::evaluate_member(h, spec, psi, cfg));
      rec.families.push_back(detail::average(members));
      detail::warn_short_krylov(rec.families.back(), h.dim(), fam.name, hz);
    }
    slots[gi] = std::move(rec);
  });
  return detail::assemble(cfg, slots);
}

/// Banded random model sweep over k. Realization r uses the same (H0, V)
/// at every k, so curves are smooth in k; its k = ref Hamiltonian defines
/// the reference eigenbasis.
inline SweepResult run_banded_sweep(SweepConfig cfg) {
  require(cfg.model == ModelKind::banded, "run_banded_sweep needs model = banded");
  apply_defaults(cfg);
  validate(cfg);
  for (double k : cfg.param_grid) require(k >= 0.0, "k grid must be >= 0");
  const int bw = cfg.bandwidth();
  std::vector<BandedComponents> comps;
  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < cfg.realizations; ++r) {
    seeds.push_back(derive_seed(cfg.seed, {1, std::uint64_t(r)}));
    comps.push_back(banded_components(cfg.dim, bw, seeds.back()));
  }
  // refs[(realization, ref k)]
  std::map<std::pair<int, double>, SpectralData> refs;
  for (const auto& f : cfg.families) {
    require(f.kind != FamilyKind::all_up, "all_up is an Ising-only family");
    if (!f.ref) continue;
    const bool per_realization = f.kind == FamilyKind::border || f.kind == FamilyKind::uniform;
    for (int r = 0; r < (per_realization ? cfg.realizations : 1); ++r)
      if (!refs.count({r, *f.ref}))
        refs.emplace(std::pair{r, *f.ref}, eigendecompose(compose_banded(comps[r], *f.ref, bw, seeds[r])));
  }
  std::vector<std::vector<StateVector>> random_states(cfg.families.size());
  for (std::size_t f = 0; f < cfg.families.size(); ++f)
    if (cfg.families[f].kind == FamilyKind::random)
      for (int s = 0; s < cfg.families[f].count; ++s)
        random_states[f].push_back(state_random(cfg.dim, derive_seed(cfg.seed, {2, f, std::uint64_t(s)})));

  std::vector<std::optional<SweepRecord>> slots(cfg.param_grid.size());
  parallel_for_index(cfg.param_grid.size(), cfg.threads, [&](std::size_t gi) {
    const double k = cfg.param_grid[gi];
    std::vector<Hamiltonian> hs;
    std::vector<SpectralData> specs;
    double r_sum = 0.0;
    for (int r = 0; r < cfg.realizations; ++r) {
      hs.push_back(compose_banded(comps[r], k, bw, seeds[r]));
      specs.push_back(eigendecompose(hs.back()));
      if (specs.back().near_degenerate && !cfg.allow_degenerate) {
        detail::warn_skip(k, "near-degenerate spectrum in realization " + std::to_string(r));
        return;
      }
      try {
        r_sum += r_ratio_mean(specs.back().eigenvalues);
      } catch (const DegenerateSpectrumError& e) {
        detail::warn_skip(k, e.what());
        return;
      }
    }
    SweepRecord rec;
    rec.param = k;
    rec.eta = eta(r_sum / cfg.realizations);
    for (std::size_t f = 0; f < cfg.families.size(); ++f) {
      const auto& fam = cfg.families[f];
      std::vector<detail::MemberResult> members;
      if (fam.kind == FamilyKind::random) {
        for (const auto& psi : random_states[f]) members.push_back(detail::evaluate_member(hs[0], specs[0], psi, cfg));
      } else if (fam.kind == FamilyKind::eigenstates) {
        const auto& basis_spec = fam.ref ? refs.at({0, *fam.ref}) : specs[0];
        for (const auto& psi : detail::spectral_family_states(fam, basis_spec))
          members.push_back(detail::evaluate_member(hs[0], specs[0], psi, cfg));
      } else {
        for (int r = 0; r < cfg.realizations; ++r) {
          const auto& basis_spec = fam.ref ? refs.at({r, *fam.ref}) : specs[r];
          for (const auto& psi : detail::spectral_family_states(fam, basis_spec))
            members.push_back(detail::evaluate_member(hs[r], specs[r], psi, cfg));
        }
      }
      rec.families.push_back(detail::average(members));
      detail::warn_short_krylov(rec.families.back(), cfg.dim, fam.name, k);
    }
    slots[gi] = std::move(rec);
  });
  return detail::assemble(cfg, slots);
}

}  // namespace krylovchaos::harness
