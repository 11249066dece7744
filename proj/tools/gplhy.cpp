// Command-line driver: ground states, bound tables, critical-mass bisection,
// energy sweeps, and snapshot diagnostics for the rescaled dipolar GP+LHY
// functional.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gplhy/gplhy.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitArg = 1;
constexpr int kExitNoConv = 2;
constexpr int kExitIo = 3;

struct GridArgs {
  int nx = 64, ny = 64, nz = 64;
  std::vector<double> box;  // empty (auto), one value (cubic), or three

  gplhy::GridSpec resolve(double b, double lambda) const {
    gplhy::GridSpec g;
    if (box.empty()) {
      g = gplhy::suggest_grid(b, lambda, nx);
      g.ny = ny;
      g.nz = nz;
      // keep the per-axis spacing the auto-sizer chose when n differs
      if (ny != nx) g.ly = g.lx / nx * ny;
      if (nz != nx) g.lz = g.lz / nx * nz;
      return g;
    }
    g.nx = nx;
    g.ny = ny;
    g.nz = nz;
    if (box.size() == 1) {
      g.lx = g.ly = g.lz = box[0];
    } else if (box.size() == 3) {
      g.lx = box[0];
      g.ly = box[1];
      g.lz = box[2];
    } else {
      throw std::domain_error("--box takes one or three lengths");
    }
    return g;
  }

  void attach(CLI::App* cmd) {
    cmd->add_option("--nx", nx, "grid points along x")->check(CLI::PositiveNumber);
    cmd->add_option("--ny", ny, "grid points along y")->check(CLI::PositiveNumber);
    cmd->add_option("--nz", nz, "grid points along z")->check(CLI::PositiveNumber);
    cmd->add_option("--box", box,
                    "box lengths: one value (cubic) or three (Lx Ly Lz); "
                    "default auto-sized from the ansatz optimum")
        ->expected(1, 3);
  }
};

void write_text_or_fail(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

int cmd_bounds(double b, const std::string& format) {
  const gplhy::BoundsReport r = gplhy::bounds_report(b);
  const double scale = std::pow(b - 1.0, 2.5);
  if (format == "json") {
    nlohmann::json j = gplhy::bounds_json(r);
    j["b"] = b;
    j["version"] = gplhy::kVersion;
    std::cout << j.dump(2) << "\n";
  } else if (format == "csv") {
    std::cout << "b,lower,lower_numeric,upper_numeric,alpha_star,"
                 "upper_closed_form_at_alpha_star,lower_scaled,upper_scaled\n";
    std::cout << b << "," << r.lower << "," << r.lower_numeric << "," << r.upper_numeric
              << "," << r.alpha_star << "," << r.upper_closed_form_at_alpha_star << ","
              << r.lower * scale << "," << r.upper_numeric * scale << "\n";
  } else {
    std::printf("critical-mass bounds at b = %g\n", b);
    std::printf("  lower (closed form)         : %.6f\n", r.lower);
    std::printf("  lower (F1 system solve)     : %.6f   [ratio to closed form %.6f]\n",
                r.lower_numeric, r.lower_numeric / r.lower);
    std::printf("  upper (inf_alpha lambda1)   : %.6f   at alpha* = %.6f\n",
                r.upper_numeric, r.alpha_star);
    std::printf("  printed lambda1 formula     : %.6f   [ratio to numeric %.6g]\n",
                r.upper_closed_form_at_alpha_star,
                r.upper_closed_form_at_alpha_star / r.upper_numeric);
    std::printf("  scaled by (b-1)^(5/2)       : lower %.4f, upper %.4f  (paper constant"
                " for comparison: 84.437)\n",
                r.lower * scale, r.upper_numeric * scale);
    std::printf("  note: %s\n", r.discrepancy_note.c_str());
  }
  return kExitOk;
}

struct DiagnosticsOut {
  gplhy::VirialReport virial;
  double yukawa = std::numeric_limits<double>::quiet_NaN();
  std::optional<gplhy::DecayReport> decay;
};

DiagnosticsOut run_diagnostics(const gplhy::Field& psi, const gplhy::MinimizeResult& res,
                               double b, const gplhy::MultiplierTable& table) {
  DiagnosticsOut d;
  d.virial = gplhy::virial_check(res.breakdown, res.mu, gplhy::mass(psi));
  if (res.mu < 0.0)
    d.yukawa = gplhy::yukawa_residual(psi, res.mu, b, table, gplhy::yukawa_default_t(res.mu));
  try {
    d.decay = gplhy::decay_fit(psi, res.mu);
  } catch (const std::domain_error&) {
    d.decay.reset();
  }
  return d;
}

int cmd_minimize(double b, double lambda, const GridArgs& grid_args,
                 gplhy::MinimizeOptions opts, const std::string& init_state,
                 const std::string& out_path, const std::string& report_path) {
  const gplhy::GridSpec grid = grid_args.resolve(b, lambda);
  if (opts.init == gplhy::InitMode::file) {
    const gplhy::SnapshotData snap = gplhy::read_snapshot(init_state);
    opts.init_field = snap.field;
    if (!(snap.field.grid == grid))
      throw std::domain_error("initial state grid does not match the run grid");
  }
  const gplhy::KernelSpec kernel = gplhy::KernelSpec::dipolar();
  const gplhy::MinimizeResult res = gplhy::minimize({b, lambda}, grid, kernel, opts);

  const auto table = gplhy::build_multiplier_table(kernel, grid, opts.pad);
  const DiagnosticsOut diag = run_diagnostics(res.field, res, b, table);

  std::optional<gplhy::BoundsReport> bounds;
  if (b > 1.0) bounds = gplhy::bounds_report(b);

  const double eps_neg = 1e-5 * lambda;
  const bool binding = res.breakdown.E < -eps_neg;

  std::printf("b=%g lambda=%g grid %dx%dx%d box %.4g x %.4g x %.4g\n", b, lambda, grid.nx,
              grid.ny, grid.nz, grid.lx, grid.ly, grid.lz);
  std::printf("E = %.8g  (T=%.6g I4=%.6g Idd=%.6g Q=%.6g)\n", res.breakdown.E,
              res.breakdown.T, res.breakdown.I4, res.breakdown.Idd, res.breakdown.Q);
  std::printf("mu = %.8g  residual = %.3g  iterations = %d  converged = %s\n", res.mu,
              res.residual, res.iterations, res.converged ? "true" : "false");
  if (!binding) std::printf("no binding detected (E >= -1e-5*lambda)\n");

  if (!out_path.empty()) gplhy::write_snapshot(out_path, res.field, b, lambda);
  if (!report_path.empty()) {
    const nlohmann::json j = gplhy::make_report(
        b, lambda, grid, res, diag.virial, diag.yukawa,
        diag.decay ? &*diag.decay : nullptr, bounds ? &*bounds : nullptr);
    write_text_or_fail(report_path, j.dump(2) + "\n");
  }
  return res.converged ? kExitOk : kExitNoConv;
}

int cmd_critical_mass(double b, double rel_tol, const GridArgs& grid_args,
                      const gplhy::MinimizeOptions& opts, const std::string& out_path,
                      const std::string& report_path) {
  const double hi_lambda = 2.0 * gplhy::upper_bound(b).value;
  const gplhy::GridSpec grid = grid_args.resolve(b, hi_lambda);
  const gplhy::KernelSpec kernel = gplhy::KernelSpec::dipolar();
  const gplhy::CriticalMassResult r =
      gplhy::critical_mass(b, grid, kernel, opts, rel_tol);

  std::printf("lambda_c estimate at b=%g: %.6g  bracket [%.6g, %.6g]  rel width %.3g\n", b,
              r.lambda_c_estimate, r.bracket.first, r.bracket.second, r.rel_width);
  std::string csv = "lambda,E_min,bound\n";
  for (const auto& [lam, e] : r.predicate_evaluations) {
    csv += std::to_string(lam) + "," + std::to_string(e) + "," +
           (e < -1e-5 * lam ? "1" : "0") + "\n";
  }
  if (out_path.empty())
    std::cout << csv;
  else
    write_text_or_fail(out_path, csv);
  if (!report_path.empty()) {
    nlohmann::json j;
    j["b"] = b;
    j["lambda_c_estimate"] = r.lambda_c_estimate;
    j["bracket"] = {r.bracket.first, r.bracket.second};
    j["rel_width"] = r.rel_width;
    nlohmann::json evals = nlohmann::json::array();
    for (const auto& [lam, e] : r.predicate_evaluations) evals.push_back({lam, e});
    j["evaluations"] = evals;
    j["version"] = gplhy::kVersion;
    write_text_or_fail(report_path, j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_sweep(double b, double lambda_min, double lambda_max, int steps,
              const GridArgs& grid_args, const gplhy::MinimizeOptions& opts,
              const std::string& out_path) {
  gplhy::require(steps >= 2, "sweep needs at least 2 steps");
  gplhy::require(lambda_min > 0.0 && lambda_min < lambda_max,
                 "need 0 < lambda-min < lambda-max");
  std::vector<double> lambdas(steps);
  for (int i = 0; i < steps; ++i)
    lambdas[i] = lambda_min + (lambda_max - lambda_min) * i / (steps - 1);

  const gplhy::GridSpec grid = grid_args.resolve(b, lambda_max);
  const gplhy::KernelSpec kernel = gplhy::KernelSpec::dipolar();
  const auto curve = gplhy::energy_curve(b, lambdas, grid, kernel, opts);

  std::string csv = "lambda,E,mu,converged\n";
  for (const auto& p : curve)
    csv += std::to_string(p.lambda) + "," + std::to_string(p.energy) + "," +
           std::to_string(p.mu) + "," + (p.converged ? "1" : "0") + "\n";
  if (out_path.empty())
    std::cout << csv;
  else
    write_text_or_fail(out_path, csv);

  const gplhy::CurveReport rep = gplhy::curve_checks(curve);
  if (rep.ok()) {
    std::printf("curve checks: ok (%zu points)\n", curve.size());
  } else {
    for (const auto& v : rep.violations)
      std::printf("curve violation: %s at points %zu,%zu,%zu (amount %.3g)\n",
                  v.kind.c_str(), v.i, v.j, v.k, v.amount);
  }
  return kExitOk;
}

int cmd_check(const std::string& state_path, std::optional<double> b_override, bool pad,
              const std::string& report_path) {
  const gplhy::SnapshotData snap = gplhy::read_snapshot(state_path);
  const double b = b_override.value_or(snap.b);
  gplhy::require_positive(b, "b");
  const gplhy::KernelSpec kernel = gplhy::KernelSpec::dipolar();
  const auto table = gplhy::build_multiplier_table(kernel, snap.field.grid, pad);

  gplhy::MinimizeResult res;  // reuse the report layout for a loaded state
  res.field = snap.field;
  res.breakdown = gplhy::energy_breakdown(snap.field, b, table);
  const gplhy::ELResult el = gplhy::el_apply(snap.field, b, table);
  res.mu = el.mu;
  res.residual = el.residual;
  res.iterations = 0;
  res.converged = true;

  const DiagnosticsOut diag = run_diagnostics(snap.field, res, b, table);
  std::optional<gplhy::BoundsReport> bounds;
  if (b > 1.0) bounds = gplhy::bounds_report(b);

  std::printf("state %s: b=%g lambda=%g (stored), mass=%.8g\n", state_path.c_str(), snap.b,
              snap.lambda, gplhy::mass(snap.field));
  std::printf("E = %.8g  mu = %.8g  EL residual = %.3g\n", res.breakdown.E, res.mu,
              res.residual);
  std::printf("virial: id1=%.3g id2=%.3g id3=%.3g dilation=%.3g mu_sign_ok=%s\n",
              diag.virial.res_identity1, diag.virial.res_identity2,
              diag.virial.res_identity3, diag.virial.res_dilation,
              diag.virial.mu_sign_ok ? "true" : "false");
  if (std::isfinite(diag.yukawa)) std::printf("yukawa residual (t^2=-mu/4): %.3g\n", diag.yukawa);
  if (diag.decay)
    std::printf("decay fit: t_fit=%.4g R2=%.4f over [%g, %g] (%d shells)\n",
                diag.decay->t_fit, diag.decay->r_squared, diag.decay->r_min,
                diag.decay->r_max, diag.decay->shells);

  if (!report_path.empty()) {
    const nlohmann::json j = gplhy::make_report(
        b, snap.lambda, snap.field.grid, res, diag.virial, diag.yukawa,
        diag.decay ? &*diag.decay : nullptr, bounds ? &*bounds : nullptr);
    write_text_or_fail(report_path, j.dump(2) + "\n");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ground states and critical-mass bounds of the rescaled dipolar "
               "GP functional with LHY correction"};
  app.require_subcommand(1);

  // ---- bounds ----
  double b = 2.0;
  std::string format = "text";
  auto* sb = app.add_subcommand("bounds", "lower/upper bounds on lambda_c(b)");
  sb->add_option("--b", b, "dipolar ratio b = a_dd/a_s (must exceed 1)")->required();
  sb->add_option("--format", format, "text|json|csv")
      ->check(CLI::IsMember({"text", "json", "csv"}));

  // ---- minimize ----
  double lambda = 1.0, tol = 1e-6;
  int max_iter = 50000;
  std::uint64_t seed = 0;
  std::string init = "ansatz", state, out_path, report_path;
  bool pad = true, no_pad = false, dealias = false;
  GridArgs grid_args;
  auto* sm = app.add_subcommand("minimize", "mass-constrained ground-state solve");
  sm->add_option("--b", b, "dipolar ratio")->required();
  sm->add_option("--lambda", lambda, "mass constraint")->required();
  grid_args.attach(sm);
  sm->add_option("--tol", tol, "EL residual target (default 1e-6)");
  sm->add_option("--max-iter", max_iter, "iteration cap (default 50000)");
  sm->add_option("--init", init, "ansatz|random|file")
      ->check(CLI::IsMember({"ansatz", "random", "file"}));
  sm->add_option("--state", state, "input snapshot for --init file");
  sm->add_option("--seed", seed, "seed for --init random (default 0)");
  sm->add_option("--out", out_path, "write converged state snapshot here");
  sm->add_option("--report", report_path, "write JSON report here");
  sm->add_flag("--no-pad", no_pad, "disable zero-padded convolution in the solver");
  sm->add_flag("--dealias", dealias, "2/3-rule dealiasing of the nonlinear terms");

  // ---- critical-mass ----
  double rel_tol = 0.02, cm_tol = 1e-5;
  int cm_max_iter = 4000;
  std::string cm_out, cm_report;
  GridArgs cm_grid;
  auto* sc = app.add_subcommand("critical-mass", "bisection estimate of lambda_c(b)");
  sc->add_option("--b", b, "dipolar ratio (must exceed 1)")->required();
  sc->add_option("--rel-tol", rel_tol, "bracket width target (default 0.02)");
  cm_grid.attach(sc);
  sc->add_option("--tol", cm_tol, "per-probe EL residual target (default 1e-5)");
  sc->add_option("--max-iter", cm_max_iter, "per-probe iteration cap (default 4000)");
  sc->add_option("--out", cm_out, "CSV of predicate evaluations");
  sc->add_option("--report", cm_report, "write JSON summary here");

  // ---- sweep ----
  double lambda_min = 1.0, lambda_max = 10.0;
  int steps = 5;
  double sw_tol = 1e-5;
  int sw_max_iter = 6000;
  std::string sw_out;
  GridArgs sw_grid;
  auto* ss = app.add_subcommand("sweep", "energy curve over a lambda range");
  ss->add_option("--b", b, "dipolar ratio")->required();
  ss->add_option("--lambda-min", lambda_min)->required();
  ss->add_option("--lambda-max", lambda_max)->required();
  ss->add_option("--steps", steps, "number of lambda points (default 5)");
  sw_grid.attach(ss);
  ss->add_option("--tol", sw_tol, "per-point EL residual target (default 1e-5)");
  ss->add_option("--max-iter", sw_max_iter, "per-point iteration cap (default 6000)");
  ss->add_option("--out", sw_out, "CSV output path (default stdout)");

  // ---- check ----
  std::string ck_state, ck_report;
  double ck_b = -1.0;
  bool ck_pad = false;
  auto* sk = app.add_subcommand("check", "diagnostics on a stored snapshot");
  sk->add_option("--state", ck_state, "snapshot path")->required();
  sk->add_option("--b", ck_b, "override the stored b");
  sk->add_flag("--pad", ck_pad, "use zero-padded convolution for the checks");
  sk->add_option("--report", ck_report, "write JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitArg;
  }

  try {
    if (sb->parsed()) return cmd_bounds(b, format);
    if (sm->parsed()) {
      gplhy::MinimizeOptions opts;
      opts.tol = tol;
      opts.max_iter = max_iter;
      opts.seed = seed;
      opts.pad = pad && !no_pad;
      opts.dealias = dealias;
      if (init == "random")
        opts.init = gplhy::InitMode::random;
      else if (init == "file")
        opts.init = gplhy::InitMode::file;
      if (opts.init == gplhy::InitMode::file && state.empty())
        throw std::domain_error("--init file requires --state");
      return cmd_minimize(b, lambda, grid_args, opts, state, out_path, report_path);
    }
    if (sc->parsed()) {
      gplhy::MinimizeOptions opts;
      opts.tol = cm_tol;
      opts.max_iter = cm_max_iter;
      return cmd_critical_mass(b, rel_tol, cm_grid, opts, cm_out, cm_report);
    }
    if (ss->parsed()) {
      gplhy::MinimizeOptions opts;
      opts.tol = sw_tol;
      opts.max_iter = sw_max_iter;
      return cmd_sweep(b, lambda_min, lambda_max, steps, sw_grid, opts, sw_out);
    }
    if (sk->parsed()) {
      std::optional<double> bo;
      if (ck_b > 0.0) bo = ck_b;
      return cmd_check(ck_state, bo, ck_pad, ck_report);
    }
  } catch (const gplhy::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitArg;
  } catch (const gplhy::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNoConv;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitArg;
}
