// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits with the number of
// failed criteria.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gplhy/gplhy.hpp"

using namespace gplhy;

namespace {

struct Clause {
  std::string text;
  bool pass;
};

struct Outcome {
  bool pass = true;
  std::vector<Clause> clauses;
  void check(bool ok, const std::string& text) {
    clauses.push_back({text, ok});
    pass = pass && ok;
  }
};

int g_failures = 0;

template <typename F>
void criterion(int id, const std::string& name, double budget_s, F&& body) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.check(false, std::string("unexpected exception: ") + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.check(secs < budget_s,
            "runtime " + std::to_string(secs) + " s within budget " +
                std::to_string(budget_s) + " s");
  std::printf("[%s] criterion %d: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", id,
              name.c_str(), secs);
  for (const auto& c : out.clauses)
    std::printf("    %s %s\n", c.pass ? "ok  " : "FAIL", c.text.c_str());
  if (!out.pass) ++g_failures;
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const KernelSpec kDip = KernelSpec::dipolar();

int run_cli(const std::string& args) {
  const char* bin = std::getenv("GPLHY_BIN");
  if (!bin) return -99;
  const std::string cmd = std::string(bin) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main() {
  std::printf("gplhy acceptance suite (version %s)\n", kVersion);

  // -------------------------------------------------------------------
  criterion(1, "lower-bound constants (closed form and F1 system solve)", 1.0,
            [](Outcome& out) {
              const double lb2 = sobolev_lower_bound(2.0);
              out.check(std::abs(lb2 - 29.8037) < 1e-4,
                        "sobolev_lower_bound(2) = " + fmt(lb2) + " vs 29.8037 (1e-4)");
              const double f1_2 = solve_F1(2.0).lambda0;
              out.check(std::abs(f1_2 - 29.8037) < 1e-3 * 29.8037,
                        "solve_F1(2) = " + fmt(f1_2) +
                            " vs 29.8037 within 1e-3 rel; measured ratio " +
                            fmt(f1_2 / lb2) +
                            " = 5/3 exactly: the printed closed form carries the"
                            " elimination exponent (5/3)^{1/2} where the system"
                            " solve gives (5/3)^{3/2}");
              const double lb5 = sobolev_lower_bound(5.0);
              out.check(std::abs(lb5 - 0.93136) < 1e-4,
                        "sobolev_lower_bound(5) = " + fmt(lb5) + " vs 0.93136 (1e-4)");
              const double f1_5 = solve_F1(5.0).lambda0;
              out.check(std::abs(f1_5 - 0.93136) < 1e-3 * 0.93136,
                        "solve_F1(5) = " + fmt(f1_5) + " vs 0.93136 (same 5/3 ratio)");
            });

  // -------------------------------------------------------------------
  criterion(2, "anisotropy function values and monotonicity", 10.0, [](Outcome& out) {
    out.check(std::abs(anisotropy_f(0.5) - 0.47923) < 1e-4,
              "f(0.5) = " + fmt(anisotropy_f(0.5)) + " vs 0.47923 (1e-4)");
    out.check(std::abs(anisotropy_f(1.0)) < 1e-8, "f(1) = 0 (1e-8)");
    out.check(std::abs(anisotropy_f(1e-3) - 1.0) < 1e-4,
              "f(1e-3) = " + fmt(anisotropy_f(1e-3)) + " vs 1 (1e-4)");
    out.check(std::abs(anisotropy_f(1e3) + 2.0) < 1e-2,
              "f(1e3) = " + fmt(anisotropy_f(1e3)) + " vs -2 (1e-2)");
    bool monotone = true;
    double prev = anisotropy_f(std::pow(2.0, -10.0));
    for (int i = 1; i < 10000; ++i) {
      const double v = anisotropy_f(std::pow(2.0, -10.0 + 20.0 * i / 9999.0));
      monotone = monotone && v < prev + 1e-12;
      prev = v;
    }
    out.check(monotone, "strictly decreasing on a 10^4-point dyadic mesh");
  });

  // -------------------------------------------------------------------
  criterion(3, "gaussian grid energies match the ansatz formula", 30.0, [](Outcome& out) {
    struct Case {
      double lambda, b, sr, sz;
    };
    for (const Case c : {Case{10, 2, 2, 4}, Case{10, 2, 3, 3}, Case{5, 1.5, 2, 6}}) {
      const GridSpec g = GridSpec::cubic(64, 8.0 * std::max(c.sr, c.sz));
      const MultiplierTable table = build_multiplier_table(kDip, g);
      const double grid_e = energy_breakdown(make_gaussian(g, c.lambda, c.sr, c.sz),
                                             c.b, table).E;
      const double ansatz = ansatz_energy(c.lambda, c.b, AnsatzParams(c.sr, c.sz));
      const double rel = std::abs(grid_e - ansatz) / std::abs(ansatz);
      out.check(rel < 1e-3, "(" + fmt(c.lambda) + "," + fmt(c.b) + "," + fmt(c.sr) + "," +
                                fmt(c.sz) + "): grid " + fmt(grid_e) + " vs ansatz " +
                                fmt(ansatz) + " rel dev " + fmt(rel));
    }
  });

  // -------------------------------------------------------------------
  criterion(4, "bounds sandwich and the scaled-constant comparison", 10.0,
            [](Outcome& out) {
              std::printf("    b     lower      upper      upper*(b-1)^(5/2)  [paper prints"
                          " 84.437]\n");
              for (const double b : {1.5, 2.0, 5.0, 10.0}) {
                const double lb = sobolev_lower_bound(b);
                const UpperBound ub = upper_bound(b);
                const double scaled = ub.value * std::pow(b - 1.0, 2.5);
                std::printf("    %-5g %-10.5g %-10.6g %-10.6g\n", b, lb, ub.value, scaled);
                out.check(lb <= ub.value, "b=" + fmt(b) + ": lower " + fmt(lb) +
                                              " <= upper " + fmt(ub.value));
              }
              const BoundsReport rep = bounds_report(2.0);
              out.check(!rep.discrepancy_note.empty(),
                        "discrepancy note explains the closed-form prefactor issue "
                        "(printed 2^{19/12} vs eliminated 2^{25/4})");
            });

  // -------------------------------------------------------------------
  criterion(5, "energy gradient vs central finite differences", 10.0, [](Outcome& out) {
    const GridSpec g = GridSpec::cubic(16, 4.0);
    const MultiplierTable table = build_multiplier_table(kDip, g);
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> nrm(0.0, 1.0);
    auto smooth = [&]() {
      struct Mode {
        double kx, ky, kz;
        cdouble c;
      };
      std::vector<Mode> modes;
      for (int m = 0; m < 6; ++m)
        modes.push_back({g.kx(static_cast<int>(rng() % 4)), g.ky(static_cast<int>(rng() % 4)),
                         g.kz(static_cast<int>(rng() % 4)), cdouble{nrm(rng), nrm(rng)}});
      return sample(g, [&](double x, double y, double z) {
        cdouble v{0.3, 0.0};
        for (const auto& mo : modes)
          v += mo.c * std::exp(cdouble{0.0, mo.kx * x + mo.ky * y + mo.kz * z});
        return 0.5 * v;
      });
    };
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const Field psi = smooth(), dir = smooth();
      const double eps = 1e-5;
      Field p(g), m(g);
      for (std::size_t i = 0; i < psi.values.size(); ++i) {
        p.values[i] = psi.values[i] + eps * dir.values[i];
        m.values[i] = psi.values[i] - eps * dir.values[i];
      }
      const double fd =
          (energy_breakdown(p, 2.0, table).E - energy_breakdown(m, 2.0, table).E) /
          (2.0 * eps);
      const Field h = el_image(psi, 2.0, table);
      double an = 0.0;
      for (std::size_t i = 0; i < psi.values.size(); ++i)
        an += (std::conj(h.values[i]) * dir.values[i]).real();
      an *= 2.0 * g.cell_volume();
      worst = std::max(worst, std::abs(fd - an) / std::abs(an));
    }
    out.check(worst < 1e-5, "20 random pairs, worst relative deviation " + fmt(worst));
  });

  // -------------------------------------------------------------------
  criterion(6, "supercritical droplet at b=2, lambda = 2 upper_bound(2)", 600.0,
            [](Outcome& out) {
              const double b = 2.0;
              const double lambda = 2.0 * upper_bound(b).value;
              const GridSpec grid = suggest_grid(b, lambda, 64);
              MinimizeOptions opts;  // defaults: tol 1e-6, padded solver
              const MinimizeResult res = minimize({b, lambda}, grid, kDip, opts);
              out.check(res.converged, "converged=true (residual " + fmt(res.residual) +
                                           " <= tol 1e-6, " +
                                           std::to_string(res.iterations) + " iters)");
              out.check(res.breakdown.E < 0.0, "E = " + fmt(res.breakdown.E) + " < 0");
              out.check(res.mu < 0.0, "mu = " + fmt(res.mu) + " < 0");
              const VirialReport vir = virial_check(res.breakdown, res.mu, lambda);
              const double vmax =
                  std::max({vir.res_identity1, vir.res_identity2, vir.res_identity3,
                            vir.res_dilation});
              out.check(vmax < 1e-2, "virial residuals {" + fmt(vir.res_identity1) + ", " +
                                         fmt(vir.res_identity2) + ", " +
                                         fmt(vir.res_identity3) + ", " +
                                         fmt(vir.res_dilation) + "} < 1e-2");
              const MultiplierTable table = build_multiplier_table(kDip, grid, opts.pad);
              const double yk = yukawa_residual(res.field, res.mu, b, table,
                                                std::sqrt(-res.mu) / 2.0);
              out.check(yk < 1e-3, "yukawa residual (t^2=-mu/4) = " + fmt(yk) + " < 1e-3");
              try {
                const DecayReport d = decay_fit(res.field, res.mu);
                out.check(d.t_fit > 0.0 && d.r_squared > 0.98,
                          "decay fit t_fit = " + fmt(d.t_fit) + " > 0 with R^2 = " +
                              fmt(d.r_squared) + " > 0.98");
                out.check(d.t_fit >= 0.3 * std::sqrt(-res.mu),
                          "t_fit >= 0.3 sqrt(-mu) = " + fmt(0.3 * std::sqrt(-res.mu)));
              } catch (const std::domain_error& e) {
                out.check(false,
                          std::string("decay fit: ") + e.what() +
                              " [the converged state is an aspect ~11 filament: its "
                              "radial-max half radius is the droplet half-length ~" +
                              fmt(0.5 * grid.lz / 4.3) +
                              ", so the window [2 r_half, 0.8 min(L)/2] is empty on any "
                              "64^3 box that still resolves the transverse core]");
                out.check(false, "t_fit >= 0.3 sqrt(-mu) unmeasurable for the same reason");
              }
            });

  // -------------------------------------------------------------------
  criterion(7, "subcritical mass at b=2: no binding", 600.0, [](Outcome& out) {
    const double b = 2.0, lambda = 0.5 * 29.8037;
    const GridSpec grid = suggest_grid(b, lambda, 64);
    MinimizeOptions opts;
    const MinimizeResult res = minimize({b, lambda}, grid, kDip, opts);
    out.check(res.breakdown.E >= -1e-4 * lambda,
              "E = " + fmt(res.breakdown.E) + " >= -1e-4 lambda = " + fmt(-1e-4 * lambda));
  });

  // -------------------------------------------------------------------
  criterion(8, "critical-mass sandwich at b=2", 3600.0, [](Outcome& out) {
    const double b = 2.0;
    const UpperBound ub = upper_bound(b);
    const GridSpec grid = suggest_grid(b, 2.0 * ub.value, 64);
    MinimizeOptions opts;
    opts.tol = 1e-5;
    opts.max_iter = 4000;
    const CriticalMassResult r = critical_mass(b, grid, kDip, opts, 0.05);
    out.check(r.lambda_c_estimate >= 29.8037 && r.lambda_c_estimate <= ub.value,
              "estimate " + fmt(r.lambda_c_estimate) + " inside [29.8037, " +
                  fmt(ub.value) + "], bracket [" + fmt(r.bracket.first) + ", " +
                  fmt(r.bracket.second) + "], " +
                  std::to_string(r.predicate_evaluations.size()) + " solves");
    out.check(r.rel_width <= 0.05, "relative bracket width " + fmt(r.rel_width));
  });

  // -------------------------------------------------------------------
  criterion(9, "curve properties over lambda in [40, 240] at b=2", 3600.0,
            [](Outcome& out) {
              const double b = 2.0;
              std::vector<double> lambdas;
              for (int i = 0; i < 6; ++i) lambdas.push_back(40.0 + 200.0 * i / 5.0);
              const GridSpec grid = suggest_grid(b, 240.0, 64);
              MinimizeOptions opts;
              opts.tol = 1e-5;
              opts.max_iter = 6000;
              const auto curve = energy_curve(b, lambdas, grid, kDip, opts);
              bool mono = true, musign = true;
              for (std::size_t i = 1; i < curve.size(); ++i)
                mono = mono && curve[i].energy <=
                                   curve[i - 1].energy +
                                       1e-3 * (1.0 + std::abs(curve[i - 1].energy));
              for (const auto& p : curve)
                if (p.energy < -1e-3) musign = musign && p.mu < 0.0;
              std::string es;
              for (const auto& p : curve) es += fmt(p.energy) + " ";
              out.check(mono, "E non-increasing within 1e-3 slack: " + es);
              out.check(musign, "mu < 0 wherever E < 0");
              const CurveReport rep = curve_checks(curve);
              out.check(rep.ok(), "curve_checks (incl. in-table subadditivity): " +
                                      std::to_string(rep.violations.size()) +
                                      " violations");
            });

  // -------------------------------------------------------------------
  criterion(10, "kernel validation", 300.0, [](Outcome& out) {
    // endpoints vs the eps-truncated direct transform on a fine grid
    const double h = 0.08, R = 6.0;
    const int n = static_cast<int>(std::round(2.0 * R / h));
    auto khat = [&](const Vec3& kvec, double eps) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        const double x = -R + h * (i + 0.5);
        for (int j = 0; j < n; ++j) {
          const double y = -R + h * (j + 0.5);
          const double rxy2 = x * x + y * y;
          for (int k = 0; k < n; ++k) {
            const double z = -R + h * (k + 0.5);
            const double r2 = rxy2 + z * z;
            if (r2 <= eps * eps || r2 >= 0.9604 * R * R) continue;
            const double r = std::sqrt(r2);
            s += 3.0 / (4.0 * pi) * (1.0 - 3.0 * z * z / r2) / (r2 * r) *
                 std::cos(kvec.x * x + kvec.y * y + kvec.z * z);
          }
        }
      }
      return s * h * h * h;
    };
    auto oracle = [&](const Vec3& dir) {
      double acc = 0.0;
      for (double km : {1.5, 2.0}) {
        const Vec3 k = dir * km;
        acc += (4.0 * khat(k, 0.2) - khat(k, 0.4)) / 3.0;
      }
      return acc / 2.0;
    };
    const double oz = oracle({0, 0, 1}), ox = oracle({1, 0, 0});
    out.check(std::abs(oz - 2.0) < 0.02 * 2.0,
              "multiplier along the axis: oracle " + fmt(oz) + " vs 2 (2%)");
    out.check(std::abs(ox + 1.0) < 0.02,
              "multiplier transverse: oracle " + fmt(ox) + " vs -1 (2%)");
    out.check(multiplier_value(kDip, {0, 0, 0}) == 0.0, "m(0) = 0 by convention");

    const GridSpec g = GridSpec::cubic(48, 6.0);
    const double nr = std::pow(2.0 * pi * 0.25, -1.5);
    const Field rho = sample(g, [&](double x, double y, double z) {
      return cdouble{nr * std::exp(-(x * x + y * y + z * z) / 0.5), 0.0};
    });
    const auto table = far_field_check(kDip, rho, {0, 0, 1}, {6, 9, 12, 16, 20});
    out.check(table.pass, "far-field law at 5%: R^3 K*rho -> " +
                              fmt(table.rows.back().scaled_value) + " vs " +
                              fmt(table.rows.back().limit));
    out.check(table.trend_monotone, "deviation shrinks over the last 3 radii");

    const KernelSpec gen = KernelSpec::general([](const Vec3& u) {
      return 3.0 / (4.0 * pi) * (1.0 - 3.0 * u.z * u.z);
    });
    const double gz = multiplier_from_omega(gen, {0, 0, 1});
    const double gx = multiplier_from_omega(gen, {1, 0, 0});
    out.check(std::abs(gz - 2.0) < 1e-3 * 2.0 && std::abs(gx + 1.0) < 1e-3,
              "general-Omega quadrature path: " + fmt(gz) + " vs 2, " + fmt(gx) +
                  " vs -1 (1e-3)");
  });

  // -------------------------------------------------------------------
  criterion(11, "infrastructure: snapshots, transforms, exit codes", 60.0,
            [](Outcome& out) {
              const GridSpec g{16, 12, 20, 2.5, 3.0, 1.5};
              Field f(g);
              std::mt19937_64 rng(3);
              std::normal_distribution<double> nrm(0.0, 1.0);
              for (auto& v : f.values) v = cdouble{nrm(rng), nrm(rng)};

              write_snapshot("acc_rt.fld", f, 2.0, 1.5);
              const SnapshotData s = read_snapshot("acc_rt.fld");
              bool exact = s.b == 2.0 && s.lambda == 1.5 && s.field.grid == g;
              for (std::size_t i = 0; i < f.values.size() && exact; ++i)
                exact = std::memcmp(&s.field.values[i], &f.values[i], sizeof(cdouble)) == 0;
              out.check(exact, "snapshot round trip bit-exact");
              std::remove("acc_rt.fld");

              const auto khat = forward_transform(f);
              double ksum = 0.0;
              for (const auto& v : khat) ksum += std::norm(v);
              ksum /= g.volume();
              out.check(std::abs(ksum - mass(f)) <= 1e-12 * mass(f),
                        "parseval to 1e-12: " + fmt(ksum) + " vs " + fmt(mass(f)));
              const Field back = inverse_transform(g, khat);
              double dev = 0.0;
              for (std::size_t i = 0; i < f.values.size(); ++i)
                dev = std::max(dev, std::abs(back.values[i] - f.values[i]));
              out.check(dev < 1e-12 * f.max_abs(), "transform round trip to 1e-12");

              if (std::getenv("GPLHY_BIN")) {
                out.check(run_cli("minimize --b 5 --lambda 0.4 --nx 16 --ny 16 --nz 16 "
                                  "--box 20 --tol 1e-5") == 0,
                          "exit 0 on a converged run");
                out.check(run_cli("bounds --b 0.9") == 1, "exit 1 on an argument error");
                out.check(run_cli("minimize --b 5 --lambda 0.4 --nx 16 --ny 16 --nz 16 "
                                  "--box 20 --max-iter 2") == 2,
                          "exit 2 on non-convergence");
                out.check(run_cli("minimize --b 5 --lambda 0.4 --nx 16 --ny 16 --nz 16 "
                                  "--box 20 --out /nonexistent_gplhy/x.fld") == 3,
                          "exit 3 on an IO failure");
                {
                  std::ofstream os("acc_bad.fld", std::ios::binary);
                  os << "BADMAGIC" << std::string(64, '\0');
                }
                out.check(run_cli("check --state acc_bad.fld") == 3,
                          "exit 3 on a snapshot format error");
                std::remove("acc_bad.fld");
              } else {
                out.check(false, "GPLHY_BIN not set; exit-code contract not exercised");
              }
            });

  std::printf("%d of 11 criteria failed\n", g_failures);
  return g_failures;
}
