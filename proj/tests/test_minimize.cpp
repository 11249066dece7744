#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gplhy/gplhy.hpp"

using namespace gplhy;

namespace {
const KernelSpec kDip = KernelSpec::dipolar();
}

TEST_CASE("supercritical droplet at b=5") {
  const double b = 5.0;
  const double lambda = 2.0 * upper_bound(b).value;
  const GridSpec grid = suggest_grid(b, lambda, 64);
  MinimizeOptions opts;
  const MinimizeResult res = minimize({b, lambda}, grid, kDip, opts);

  CHECK(res.converged);
  CHECK(res.residual <= opts.tol);
  CHECK(res.breakdown.E < 0.0);
  CHECK(res.mu < 0.0);
  CHECK(mass(res.field) == doctest::Approx(lambda).epsilon(1e-10));

  SUBCASE("accepted descent energies are non-increasing") {
    for (std::size_t i = 1; i < res.energy_history.size(); ++i)
      CHECK(res.energy_history[i] < res.energy_history[i - 1]);
  }
  SUBCASE("virial residuals at convergence") {
    const VirialReport vir = virial_check(res.breakdown, res.mu, lambda);
    CHECK(vir.res_dilation < 1e-2);
    CHECK(vir.res_identity1 < 1e-2);
    CHECK(vir.res_identity2 < 1e-2);
    CHECK(vir.res_identity3 < 1e-2);
    CHECK(vir.mu_sign_ok);
  }
  SUBCASE("yukawa residual inside the resolvent window") {
    const MultiplierTable table = build_multiplier_table(kDip, grid, opts.pad);
    const double t4 = yukawa_residual(res.field, res.mu, b, table,
                                      std::sqrt(-res.mu) / 2.0);  // t^2 = -mu/4
    CHECK(t4 < 1e-3);
    const double t8 = yukawa_residual(res.field, res.mu, b, table,
                                      std::sqrt(-res.mu / 8.0));
    CHECK(t8 < 10.0 * t4);
    CHECK(t4 < 10.0 * t8);
  }
  SUBCASE("amplitude-perturbed state is flagged by the dilation residual") {
    Field scaled = res.field;
    for (auto& v : scaled.values) v *= 1.1;
    const MultiplierTable table = build_multiplier_table(kDip, grid, opts.pad);
    const EnergyBreakdown eb = energy_breakdown(scaled, b, table);
    const ELResult el = el_apply(scaled, b, table);
    const VirialReport vir = virial_check(eb, el.mu, mass(scaled));
    CHECK(vir.res_dilation > 1e-2);
  }
  SUBCASE("solver and library evaluations agree") {
    const MultiplierTable table = build_multiplier_table(kDip, grid, opts.pad);
    const EnergyBreakdown eb = energy_breakdown(res.field, b, table);
    CHECK(eb.E == doctest::Approx(res.breakdown.E).epsilon(1e-11));
    const ELResult el = el_apply(res.field, b, table);
    CHECK(el.mu == doctest::Approx(res.mu).epsilon(1e-9));
    CHECK(el.residual < 2.0 * opts.tol);
  }
}

TEST_CASE("subcritical mass spreads toward the vanishing profile") {
  const double b = 5.0;
  const double lambda = 0.5 * sobolev_lower_bound(b);
  const GridSpec grid = suggest_grid(b, lambda, 48);
  MinimizeOptions opts;
  opts.tol = 1e-6;
  const MinimizeResult res = minimize({b, lambda}, grid, kDip, opts);
  CHECK(res.breakdown.E >= -1e-4 * lambda);
  CHECK(res.breakdown.E < 1e-2);  // nearly flat state on a large box
  CHECK(mass(res.field) == doctest::Approx(lambda).epsilon(1e-10));
}

TEST_CASE("energy curve is non-increasing with negative mu where bound") {
  const double b = 5.0;
  const double ub = upper_bound(b).value;
  const GridSpec grid = suggest_grid(b, 2.0 * ub, 48);
  MinimizeOptions opts;
  opts.tol = 1e-5;
  opts.max_iter = 6000;
  const std::vector<double> lambdas{1.05 * ub, 1.5 * ub, 2.0 * ub};
  const auto curve = energy_curve(b, lambdas, grid, kDip, opts);
  REQUIRE(curve.size() == 3);
  for (const auto& p : curve) CHECK(p.converged);
  for (std::size_t i = 1; i < curve.size(); ++i)
    CHECK(curve[i].energy <= curve[i - 1].energy + 1e-3 * (1.0 + std::abs(curve[i - 1].energy)));
  for (const auto& p : curve)
    if (p.energy < -1e-3) CHECK(p.mu < 0.0);
  CHECK(curve_checks(curve).ok());
  CHECK(curve.back().energy < 0.0);
}

TEST_CASE("critical mass bisection at b=5") {
  const double b = 5.0;
  const GridSpec grid = suggest_grid(b, 2.0 * upper_bound(b).value, 48);
  MinimizeOptions opts;
  opts.tol = 1e-5;
  opts.max_iter = 4000;
  const CriticalMassResult r = critical_mass(b, grid, kDip, opts, 0.25);

  CHECK(r.lambda_c_estimate >= sobolev_lower_bound(b));
  CHECK(r.lambda_c_estimate <= upper_bound(b).value);
  CHECK(r.bracket.first <= r.lambda_c_estimate);
  CHECK(r.lambda_c_estimate <= r.bracket.second);
  CHECK(r.rel_width <= 0.25);
  CHECK(r.predicate_evaluations.size() >= 4);

  SUBCASE("bisection halves the log bracket each iteration") {
    // after the two endpoint probes, each evaluation sits at the geometric
    // midpoint of the current bracket
    double lo = 0.5 * sobolev_lower_bound(b);
    double hi = 2.0 * upper_bound(b).value;
    for (std::size_t i = 2; i < r.predicate_evaluations.size(); ++i) {
      const auto& [lam, e] = r.predicate_evaluations[i];
      CHECK(lam == doctest::Approx(std::sqrt(lo * hi)).epsilon(1e-12));
      if (e < -1e-5 * lam)
        hi = lam;
      else
        lo = lam;
    }
    CHECK(lo == doctest::Approx(r.bracket.first).epsilon(1e-12));
    CHECK(hi == doctest::Approx(r.bracket.second).epsilon(1e-12));
  }
}

TEST_CASE("compact large-b droplet: decay diagnostics on a cubic box") {
  // at large b the marginal droplet aspect is mild enough that the decay
  // window fits in the box at 64^3
  const double b = 100.0, lambda = 0.0237;
  const GridSpec grid = GridSpec::cubic(64, 0.30);
  MinimizeOptions opts;
  opts.tol = 0.05;  // the EL residual scales with |mu| ~ 2.5e4 here
  opts.max_iter = 2000;
  const MinimizeResult res = minimize({b, lambda}, grid, kDip, opts);
  CHECK(res.breakdown.E < 0.0);
  CHECK(res.mu < 0.0);

  const VirialReport vir = virial_check(res.breakdown, res.mu, lambda);
  CHECK(vir.res_dilation < 1e-2);

  const DecayReport decay = decay_fit(res.field, res.mu);
  CHECK(decay.t_fit > 0.0);
  CHECK(decay.r_squared > 0.9);
  CHECK(decay.t_fit >= 0.3 * std::sqrt(-res.mu));
  CHECK(decay.shells >= 5);

  const MultiplierTable table = build_multiplier_table(kDip, grid, opts.pad);
  CHECK(yukawa_residual(res.field, res.mu, b, table, std::sqrt(-res.mu) / 2.0) < 1e-3);
}

TEST_CASE("options and init validation") {
  const GridSpec grid = GridSpec::cubic(16, 8.0);
  SUBCASE("b <= 1 has no bisection bracket") {
    MinimizeOptions opts;
    CHECK_THROWS_AS(critical_mass(0.8, grid, kDip, opts), std::domain_error);
    CHECK_THROWS_AS(critical_mass(1.0, grid, kDip, opts), std::domain_error);
  }
  SUBCASE("curve lambdas must increase") {
    MinimizeOptions opts;
    CHECK_THROWS_AS(energy_curve(2.0, {2.0, 1.0}, grid, kDip, opts), std::domain_error);
  }
  SUBCASE("file init requires a matching grid") {
    MinimizeOptions opts;
    opts.init = InitMode::file;
    opts.init_field = Field(GridSpec::cubic(8, 4.0));
    CHECK_THROWS_AS(minimize({2.0, 1.0}, grid, kDip, opts), std::domain_error);
  }
  SUBCASE("invalid options") {
    MinimizeOptions opts;
    opts.tol = 0.0;
    CHECK_THROWS_AS(minimize({2.0, 1.0}, grid, kDip, opts), std::domain_error);
    opts.tol = 1e-6;
    opts.backtrack = 1.5;
    CHECK_THROWS_AS(minimize({2.0, 1.0}, grid, kDip, opts), std::domain_error);
  }
  SUBCASE("seeded random init is reproducible") {
    MinimizeOptions opts;
    opts.init = InitMode::random;
    opts.seed = 7;
    opts.tol = 1e-4;
    opts.max_iter = 50;
    const MinimizeResult a = minimize({2.0, 1.0}, grid, kDip, opts);
    const MinimizeResult b2 = minimize({2.0, 1.0}, grid, kDip, opts);
    CHECK(a.breakdown.E == b2.breakdown.E);
    CHECK(a.iterations == b2.iterations);
  }
}
