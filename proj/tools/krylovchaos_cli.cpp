// Command-line driver for Krylov-complexity sweeps and single experiments.
//
// Exit codes: 0 success, 1 usage/config error, 2 numerical error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "krylovchaos/harness/config.hpp"
#include "krylovchaos/harness/io.hpp"
#include "krylovchaos/harness/sweep.hpp"
#include "krylovchaos/krylovchaos.hpp"

namespace kc = krylovchaos;
namespace hn = krylovchaos::harness;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<std::string> model;
  std::optional<int> n_spins, n_eta, dim, realizations, j;
  std::optional<std::string> sector, families, profile, state, deltas;
  std::optional<double> hz_min, hz_max, k_min, k_max, h_z, k, delta, bandwidth_frac, w_frac, n0_frac;
  std::optional<int> hz_points, k_points;
  bool allow_degenerate = false;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "Flat key = value configuration file");
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--out", o.out, "Output directory");
  sub->add_option("--threads", o.threads, "Worker threads");
  sub->add_option("--n-spins", o.n_spins, "Ising chain length");
  sub->add_option("--sector", o.sector, "Parity sector: even|odd|full");
  sub->add_option("--dim", o.dim, "Matrix dimension (banded / goe)");
  sub->add_option("--bandwidth-frac", o.bandwidth_frac, "Bandwidth as a fraction of dim");
  sub->add_option("--w-frac", o.w_frac, "Moving-average half-width fraction");
  sub->add_option("--n0-frac", o.n0_frac, "Dispersion start-index fraction");
  sub->add_flag("--allow-degenerate", o.allow_degenerate, "Run Lanczos on near-degenerate spectra");
}

void add_single_point(CLI::App* sub, Overrides& o) {
  sub->add_option("--model", o.model, "ising|banded|goe");
  sub->add_option("--h-z", o.h_z, "Longitudinal field (ising)");
  sub->add_option("--k", o.k, "Perturbation strength (banded)");
  sub->add_option("--j", o.j, "Eigenstate index");
  sub->add_option("--profile", o.profile, "uniform | gaussian:<center>:<sigma>");
}

hn::SweepConfig resolve(const Overrides& o, hn::SweepConfig base) {
  hn::SweepConfig cfg = o.config.empty() ? std::move(base) : hn::parse_config(o.config, std::move(base));
  std::map<std::string, std::string> unused;
  if (o.model) cfg.model = hn::parse_model(*o.model);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out_dir = *o.out;
  if (o.threads) cfg.threads = *o.threads;
  if (o.n_spins) cfg.n_spins = *o.n_spins;
  if (o.n_eta) cfg.n_eta = *o.n_eta;
  if (o.sector) cfg.sector = hn::parse_sector(*o.sector);
  if (o.dim) cfg.dim = *o.dim;
  if (o.realizations) cfg.realizations = *o.realizations;
  if (o.bandwidth_frac) cfg.bandwidth_frac = *o.bandwidth_frac;
  if (o.w_frac) cfg.dispersion.w_frac = *o.w_frac;
  if (o.n0_frac) cfg.dispersion.n0_frac = *o.n0_frac;
  if (o.allow_degenerate) cfg.allow_degenerate = true;
  if (o.families) cfg.families = hn::parse_families(*o.families);
  if (o.h_z) cfg.h_z = *o.h_z;
  if (o.k) cfg.k = *o.k;
  if (o.j) cfg.j = *o.j;
  if (o.profile) cfg.profile = hn::parse_profile(*o.profile);
  if (o.state) cfg.state = *o.state;
  if (o.delta) cfg.delta = *o.delta;
  if (o.deltas) cfg.deltas = hn::detail::parse_list("deltas", *o.deltas);
  if (o.hz_min || o.hz_max || o.hz_points) {
    if (!(o.hz_min && o.hz_max && o.hz_points))
      throw kc::ArgumentError("--hz-min, --hz-max and --hz-points must be given together");
    cfg.param_grid = hn::log_grid(*o.hz_min, *o.hz_max, *o.hz_points);
  }
  if (o.k_min || o.k_max || o.k_points) {
    if (!(o.k_min && o.k_max && o.k_points))
      throw kc::ArgumentError("--k-min, --k-max and --k-points must be given together");
    cfg.param_grid = hn::log_grid(*o.k_min, *o.k_max, *o.k_points);
  }
  return cfg;
}

std::string out_path(const hn::SweepConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

kc::Hamiltonian build_model(const hn::SweepConfig& cfg) {
  switch (cfg.model) {
    case hn::ModelKind::ising:
      return cfg.sector == kc::Sector::full ? kc::build_ising_full(cfg.n_spins, cfg.h_z)
                                            : kc::build_ising_sector(cfg.n_spins, cfg.h_z, cfg.sector);
    case hn::ModelKind::banded:
      return kc::build_banded_random(cfg.dim, cfg.bandwidth(), cfg.k, cfg.seed);
    case hn::ModelKind::goe:
      return kc::build_goe(cfg.dim, cfg.seed);
  }
  throw kc::ArgumentError("unknown model");
}

void write_sweep_outputs(const hn::SweepConfig& cfg, const hn::SweepResult& res, const std::string& stem,
                         const std::string& x_label) {
  hn::write_csv(res, out_path(cfg, stem + ".csv"));
  hn::write_text(out_path(cfg, stem + "_dispersion.csv"), hn::to_dispersion_csv(res));
  std::vector<std::string> cbar{"eta"}, sigma{"eta"};
  for (const auto& f : res.family_names) {
    cbar.push_back(f + "_cbar_norm");
    sigma.push_back(f + "_inv_sigma_b_norm");
  }
  hn::render_svg(res, cbar, out_path(cfg, stem + "_cbar.svg"), x_label);
  hn::render_svg(res, sigma, out_path(cfg, stem + "_inv_sigma_b.svg"), x_label);
  std::string meta = "# effective configuration\n" + hn::to_config_text(cfg);
  if (!res.skipped.empty()) {
    meta += "# skipped grid points:";
    for (double p : res.skipped) meta += " " + hn::format_number(p);
    meta += "\n";
  }
  hn::write_text(out_path(cfg, stem + ".meta.txt"), meta);
  std::cout << "wrote " << res.records.size() << " grid points to " << out_path(cfg, stem + ".csv") << '\n';
}

int run_ising(const Overrides& o) {
  hn::SweepConfig base;
  base.model = hn::ModelKind::ising;
  auto cfg = resolve(o, base);
  if (cfg.model != hn::ModelKind::ising) throw kc::ArgumentError("ising-sweep needs model = ising");
  hn::apply_defaults(cfg);
  write_sweep_outputs(cfg, hn::run_ising_sweep(cfg), "ising_sweep", "h_z");
  return 0;
}

int run_banded(const Overrides& o) {
  hn::SweepConfig base;
  base.model = hn::ModelKind::banded;
  auto cfg = resolve(o, base);
  if (cfg.model != hn::ModelKind::banded) throw kc::ArgumentError("banded-sweep needs model = banded");
  hn::apply_defaults(cfg);
  write_sweep_outputs(cfg, hn::run_banded_sweep(cfg), "banded_sweep", "k");
  return 0;
}

int run_bound(const Overrides& o) {
  hn::SweepConfig base;
  base.n_spins = 9;
  base.h_z = 4.0;
  base.profile = kc::GaussianProfile{61, 10};
  auto cfg = resolve(o, base);
  hn::apply_defaults(cfg);
  const auto h = build_model(cfg);
  kc::LanczosOptions opts;
  opts.allow_degenerate = cfg.allow_degenerate;
  const auto sweep = kc::run_bound_sweep(h, cfg.j, cfg.profile, cfg.deltas, opts);
  std::string csv = "delta,c_bar,bound,holds,krylov_dim\n";
  for (std::size_t i = 0; i < sweep.deltas.size(); ++i)
    csv += hn::format_number(sweep.deltas[i]) + "," + hn::format_number(sweep.c_bar[i]) + "," +
           hn::format_number(sweep.bound[i]) + "," + (sweep.holds[i] ? "1" : "0") + "," +
           std::to_string(sweep.krylov_dim[i]) + "\n";
  hn::write_text(out_path(cfg, "bound_sweep.csv"), csv);
  hn::write_text(out_path(cfg, "bound_sweep.meta.txt"), "# effective configuration\n" + hn::to_config_text(cfg));
  std::cout << "D = " << h.dim() << ", bound holds up to delta = " << sweep.largest_delta_holding
            << (sweep.all_hold() ? " (entire grid)" : "") << '\n';
  return 0;
}

int run_scaling(const Overrides& o) {
  hn::SweepConfig base;
  base.model = hn::ModelKind::goe;
  base.dim = 32;
  base.deltas = kc::default_scaling_deltas();
  auto cfg = resolve(o, base);
  hn::apply_defaults(cfg);
  const auto h = build_model(cfg);
  kc::LanczosOptions opts;
  opts.allow_degenerate = cfg.allow_degenerate;
  const auto spec = kc::eigendecompose(h);
  const auto rep = kc::overlap_scaling_check(h, spec, cfg.j, cfg.profile, cfg.deltas, opts);
  std::string csv = "n,slope,f_n,points,included\n";
  for (const auto& f : rep.fits)
    csv += std::to_string(f.n) + "," + hn::format_number(f.slope) + "," + hn::format_number(f.f()) + "," +
           std::to_string(f.points) + "," + (f.included ? "1" : "0") + "\n";
  hn::write_text(out_path(cfg, "scaling.csv"), csv);
  std::cout << "median slope (n >= 1) = " << rep.median_slope << ", sum f_n = " << rep.sum_f << '\n';
  return 0;
}

int run_single(const Overrides& o) {
  auto cfg = resolve(o, hn::SweepConfig{});
  const auto h = build_model(cfg);
  const auto spec = kc::eigendecompose(h);
  kc::StateVector psi;
  if (cfg.state == "all_up") {
    if (cfg.model != hn::ModelKind::ising) throw kc::ArgumentError("all_up needs the Ising model");
    if (cfg.sector == kc::Sector::full) {
      psi.amplitudes = kc::Vector::Zero(h.dim());
      psi.amplitudes(0) = 1.0;
    } else {
      psi = kc::state_all_up(kc::parity_basis(cfg.n_spins, cfg.sector));
    }
  } else if (cfg.state == "uniform") {
    psi = kc::state_uniform_eigenbasis(spec);
  } else if (cfg.state == "random") {
    psi = kc::state_random(h.dim(), kc::derive_seed(cfg.seed, {3}));
  } else if (cfg.state == "eigenstate") {
    psi = kc::state_eigenstate(spec, cfg.j);
  } else if (cfg.state == "perturbed") {
    psi = kc::state_perturbed(spec, cfg.j, cfg.profile, cfg.delta);
  } else {
    throw kc::ArgumentError("state must be all_up, uniform, random, eigenstate or perturbed");
  }
  kc::LanczosOptions opts;
  opts.allow_degenerate = cfg.allow_degenerate;
  const auto lan = kc::lanczos_full_orth(h, spec, psi, opts);
  const auto sat = kc::saturation(spec, lan, psi, cfg.allow_degenerate);

  std::string coeffs = "n,a,b\n";
  for (Eigen::Index n = 0; n < lan.krylov_dim(); ++n)
    coeffs += std::to_string(n) + "," + hn::format_number(lan.a(n)) + "," +
              (n == 0 ? std::string("0") : hn::format_number(lan.b(n - 1))) + "\n";
  hn::write_text(out_path(cfg, "lanczos.csv"), coeffs);

  const auto times = kc::default_time_grid(spec);
  const auto curve = kc::complexity_spectral(spec, lan, psi, times);
  std::string cc = "t,c_k\n";
  for (std::size_t i = 0; i < times.size(); ++i)
    cc += hn::format_number(times[i]) + "," + hn::format_number(curve.values[i]) + "\n";
  hn::write_text(out_path(cfg, "complexity.csv"), cc);

  std::ostringstream summary;
  summary.precision(12);
  summary << "dim = " << h.dim() << "\nkrylov_dim = " << lan.krylov_dim()
          << "\nhalted_early = " << (lan.halted_early ? "true" : "false") << "\nc_bar = " << sat.c_bar
          << "\nc_bar_normalized = " << sat.c_bar_normalized << "\nmin_spacing = " << spec.min_spacing
          << "\nnear_degenerate = " << (spec.near_degenerate ? "true" : "false") << '\n';
  if (h.dim() >= 3) summary << "eta = " << kc::eta(kc::r_ratio_mean(spec.eigenvalues)) << '\n';
  if (lan.b.size() >= 4) {
    const std::span<const double> a(lan.a.data(), static_cast<std::size_t>(lan.a.size()));
    const std::span<const double> b(lan.b.data(), static_cast<std::size_t>(lan.b.size()));
    try {
      summary << "sigma_moving_a = " << kc::sigma_moving(a, cfg.dispersion) << '\n'
              << "sigma_moving_b = " << kc::sigma_moving(b, cfg.dispersion) << '\n';
      // sigma_log over the same index window, as in the sweeps
      const auto win = kc::resolve_window(b.size(), cfg.dispersion);
      const auto span = b.size() - win.n0 - win.w;
      if (span >= 4) summary << "sigma_log_b = " << kc::sigma_log(b.subspan(win.n0, span)) << '\n';
    } catch (const kc::ArgumentError&) {
      // sequence shorter than the moving window
    }
  }
  hn::write_text(out_path(cfg, "summary.txt"), summary.str());
  std::cout << summary.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Krylov complexity and Lanczos-coefficient diagnostics of quantum chaos"};
  app.require_subcommand(1);
  Overrides o;

  auto* ising = app.add_subcommand("ising-sweep", "Sweep the Ising chain over h_z");
  add_common(ising, o);
  ising->add_option("--n-eta", o.n_eta, "Chain length used for the r-ratio");
  ising->add_option("--hz-min", o.hz_min, "Smallest h_z of the log grid");
  ising->add_option("--hz-max", o.hz_max, "Largest h_z of the log grid");
  ising->add_option("--hz-points", o.hz_points, "Number of h_z points");
  ising->add_option("--families", o.families, "e.g. all_up,uniform,random:count=10");

  auto* banded = app.add_subcommand("banded-sweep", "Sweep the banded random model over k");
  add_common(banded, o);
  banded->add_option("--realizations", o.realizations, "Hamiltonian realizations per k");
  banded->add_option("--k-min", o.k_min, "Smallest k of the log grid");
  banded->add_option("--k-max", o.k_max, "Largest k of the log grid");
  banded->add_option("--k-points", o.k_points, "Number of k points");
  banded->add_option("--families", o.families, "e.g. border:ref=0,uniform:ref=0,random:count=10");

  auto* bound = app.add_subcommand("bound-sweep", "Saturation of perturbed eigenstates vs the delta^2 bound");
  add_common(bound, o);
  add_single_point(bound, o);
  bound->add_option("--deltas", o.deltas, "Comma-separated delta grid");

  auto* scaling = app.add_subcommand("scaling-check", "Fit |<K_n|e_j>|^2 ~ delta^slope");
  add_common(scaling, o);
  add_single_point(scaling, o);
  scaling->add_option("--deltas", o.deltas, "Comma-separated delta grid in (0, 0.05]");

  auto* single = app.add_subcommand("single-run", "One Lanczos run: coefficients, C_K(t), saturation");
  add_common(single, o);
  add_single_point(single, o);
  single->add_option("--state", o.state, "all_up|uniform|random|eigenstate|perturbed");
  single->add_option("--delta", o.delta, "Perturbation size for --state perturbed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ising) return run_ising(o);
    if (*banded) return run_banded(o);
    if (*bound) return run_bound(o);
    if (*scaling) return run_scaling(o);
    if (*single) return run_single(o);
  } catch (const kc::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const kc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
