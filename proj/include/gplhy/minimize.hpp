#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <cstdio>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "gplhy/bounds.hpp"
#include "gplhy/common.hpp"
#include "gplhy/diagnostics.hpp"
#include "gplhy/energy.hpp"
#include "gplhy/grid.hpp"
#include "gplhy/kernel.hpp"
#include "gplhy/params.hpp"

namespace gplhy {

enum class InitMode { ansatz, file, random };

struct MinimizeOptions {
  double tol = 1e-6;
  int max_iter = 50000;
  double step0 = 1e-2;
  double backtrack = 0.5;
  InitMode init = InitMode::ansatz;
  std::uint64_t seed = 0;
  std::optional<Field> init_field;
  bool pad = true;       // zero-padded convolution inside the solver
  bool dealias = false;  // 2/3-rule on the density before the convolution
  int polish_max = 4000;
};

struct MinimizeResult {
  Field field;
  EnergyBreakdown breakdown;
  double mu = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> energy_history;  // accepted descent-phase energies
  int polish_iterations = 0;
};

struct CriticalMassResult {
  double lambda_c_estimate = 0.0;
  std::pair<double, double> bracket{0.0, 0.0};
  std::vector<std::pair<double, double>> predicate_evaluations;  // (lambda, E_min)
  double rel_width = 0.0;
};

namespace detail {

// Solver workspace over real fields with preallocated real-to-complex plans.
// Energy-only evaluations need one unpadded and one (optionally padded)
// forward transform: the dipolar term is summed in k-space. The operator
// image additionally needs the two inverse transforms.
class RealWorkspace {
 public:
  RealWorkspace(const GridSpec& g, const KernelSpec& spec, double b, bool pad, bool dealias)
      : g_(g), b_(b), pad_(pad), dealias_(dealias) {
    g.validate();
    n_ = g.size();
    px_ = pad ? 2 * g.nx : g.nx;
    py_ = pad ? 2 * g.ny : g.ny;
    pz_ = pad ? 2 * g.nz : g.nz;
    pzh_ = pz_ / 2 + 1;
    np_real_ = static_cast<std::size_t>(px_) * py_ * pz_;
    np_cplx_ = static_cast<std::size_t>(px_) * py_ * pzh_;
    nzh_ = g.nz / 2 + 1;
    nc_un_ = static_cast<std::size_t>(g.nx) * g.ny * nzh_;

    rp_ = fftw_alloc_real(np_real_);
    cp_ = fftw_alloc_complex(np_cplx_);
    ru_ = fftw_alloc_real(n_);
    cu_ = fftw_alloc_complex(nc_un_);
    if (!rp_ || !cp_ || !ru_ || !cu_) throw std::bad_alloc();
    fwd_pad_ = fftw_plan_dft_r2c_3d(px_, py_, pz_, rp_, cp_, FFTW_ESTIMATE);
    bwd_pad_ = fftw_plan_dft_c2r_3d(px_, py_, pz_, cp_, rp_, FFTW_ESTIMATE);
    fwd_un_ = fftw_plan_dft_r2c_3d(g.nx, g.ny, g.nz, ru_, cu_, FFTW_ESTIMATE);
    bwd_un_ = fftw_plan_dft_c2r_3d(g.nx, g.ny, g.nz, cu_, ru_, FFTW_ESTIMATE);
    if (!fwd_pad_ || !bwd_pad_ || !fwd_un_ || !bwd_un_)
      throw NumericError("fftw r2c plan creation failed");

    // multiplier on the (padded) half spectrum
    const GridSpec pg = pad ? GridSpec{px_, py_, pz_, 2 * g.lx, 2 * g.ly, 2 * g.lz} : g;
    mult_.resize(np_cplx_);
    std::size_t idx = 0;
    for (int i = 0; i < px_; ++i)
      for (int j = 0; j < py_; ++j)
        for (int k = 0; k < pzh_; ++k, ++idx)
          mult_[idx] = multiplier_value(spec, Vec3{pg.kx(i), pg.ky(j), pg.kz(k)});

    // |k|^2, Parseval double-count weight, and 2/3-rule mask on the unpadded
    // half spectrum
    k2_.resize(nc_un_);
    wgt_.resize(nc_un_);
    idx = 0;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        for (int k = 0; k < nzh_; ++k, ++idx) {
          const double kx = g.kx(i), ky = g.ky(j), kz = g.kz(k);
          k2_[idx] = kx * kx + ky * ky + kz * kz;
          wgt_[idx] = (k == 0 || k == g.nz / 2) ? 1.0 : 2.0;
        }

    rho_.resize(n_);
    phi_.resize(n_);
  }

  ~RealWorkspace() {
    fftw_destroy_plan(fwd_pad_);
    fftw_destroy_plan(bwd_pad_);
    fftw_destroy_plan(fwd_un_);
    fftw_destroy_plan(bwd_un_);
    fftw_free(rp_);
    fftw_free(cp_);
    fftw_free(ru_);
    fftw_free(cu_);
  }

  RealWorkspace(const RealWorkspace&) = delete;
  RealWorkspace& operator=(const RealWorkspace&) = delete;

  const GridSpec& grid() const { return g_; }
  double b() const { return b_; }

  struct Energy {
    double T = 0, I4 = 0, Idd = 0, Q = 0, E = 0;
  };

  // Energy of a real field; leaves the transforms of psi and rho in the
  // buffers so complete_gradient can finish the operator image cheaply.
  Energy energy(const std::vector<double>& psi) {
    Energy e;
    const double h = g_.cell_volume();

    std::copy(psi.begin(), psi.end(), ru_);
    fftw_execute(fwd_un_);
    double t = 0.0;
    for (std::size_t i = 0; i < nc_un_; ++i) {
      const auto* c = cu_ + i;
      t += wgt_[i] * k2_[i] * ((*c)[0] * (*c)[0] + (*c)[1] * (*c)[1]);
    }
    // |psihat|^2 = h^2 |dft|^2; kinetic = sum k^2 |psihat|^2 / V
    e.T = t * h * h / g_.volume();

    double i4 = 0.0, q = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double a2 = psi[i] * psi[i];
      rho_[i] = a2;
      i4 += a2 * a2;
      q += a2 * a2 * std::abs(psi[i]);
    }
    e.I4 = 0.5 * h * i4;
    e.Q = 0.4 * h * q;

    // density into the padded buffer, transform, accumulate Idd in k-space
    std::fill(rp_, rp_ + np_real_, 0.0);
    for (int i = 0; i < g_.nx; ++i)
      for (int j = 0; j < g_.ny; ++j) {
        const double* src = rho_.data() + g_.index(i, j, 0);
        double* dst = rp_ + (static_cast<std::size_t>(i) * py_ + j) * pz_;
        std::copy(src, src + g_.nz, dst);
      }
    fftw_execute(fwd_pad_);
    if (dealias_) apply_padded_cut();
    double idd = 0.0;
    std::size_t idx = 0;
    for (int i = 0; i < px_; ++i)
      for (int j = 0; j < py_; ++j)
        for (int k = 0; k < pzh_; ++k, ++idx) {
          const double w = (k == 0 || k == pz_ / 2) ? 1.0 : 2.0;
          const auto* c = cp_ + idx;
          idd += w * mult_[idx] * ((*c)[0] * (*c)[0] + (*c)[1] * (*c)[1]);
        }
    // sum_k m |rhohat|^2 / V_pad with rhohat = h dft
    const double vol_pad = pad_ ? 8.0 * g_.volume() : g_.volume();
    e.Idd = 0.5 * b_ * idd * h * h / vol_pad;
    e.E = e.T + e.I4 + e.Idd + e.Q;
    if (!std::isfinite(e.E)) throw NumericError("minimize: non-finite energy");
    return e;
  }

  // Finishes h = -Lap psi + (rho + b K*rho + |psi| rho) psi using the spectra
  // left by the preceding energy(psi) call. Returns (mu, residual).
  std::pair<double, double> complete_gradient(const std::vector<double>& psi, double lambda,
                                              std::vector<double>& h_out) {
    const double h = g_.cell_volume();
    // K * rho from the padded spectrum
    for (std::size_t i = 0; i < np_cplx_; ++i) {
      cp_[i][0] *= mult_[i];
      cp_[i][1] *= mult_[i];
    }
    fftw_execute(bwd_pad_);
    const double scale_pad = 1.0 / static_cast<double>(np_real_);
    for (int i = 0; i < g_.nx; ++i)
      for (int j = 0; j < g_.ny; ++j) {
        const double* src = rp_ + (static_cast<std::size_t>(i) * py_ + j) * pz_;
        double* dst = phi_.data() + g_.index(i, j, 0);
        for (int k = 0; k < g_.nz; ++k) dst[k] = src[k] * scale_pad;
      }
    // -Lap psi from the unpadded spectrum
    for (std::size_t i = 0; i < nc_un_; ++i) {
      cu_[i][0] *= k2_[i];
      cu_[i][1] *= k2_[i];
    }
    fftw_execute(bwd_un_);
    const double scale_un = 1.0 / static_cast<double>(n_);
    h_out.resize(n_);
    double dot = 0.0, nrm = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double w = rho_[i] + b_ * phi_[i] + rho_[i] * std::abs(psi[i]);
      h_out[i] = ru_[i] * scale_un + w * psi[i];
      dot += psi[i] * h_out[i];
    }
    const double mu = dot * h / lambda;
    for (std::size_t i = 0; i < n_; ++i) {
      const double r = h_out[i] - mu * psi[i];
      nrm += r * r;
    }
    return {mu, std::sqrt(h * nrm / lambda)};
  }

  // (|k|^2 + c)^{-1} applied to a real field (polish preconditioner).
  void precondition(const std::vector<double>& in, double c, std::vector<double>& out) {
    std::copy(in.begin(), in.end(), ru_);
    fftw_execute(fwd_un_);
    for (std::size_t i = 0; i < nc_un_; ++i) {
      const double d = 1.0 / (k2_[i] + c);
      cu_[i][0] *= d;
      cu_[i][1] *= d;
    }
    fftw_execute(bwd_un_);
    out.resize(n_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = ru_[i] * scale;
  }

 private:
  void apply_padded_cut() {
    // 2/3-rule relative to the unpadded grid's Nyquist
    const GridSpec pg{px_, py_, pz_,
                      pad_ ? 2 * g_.lx : g_.lx, pad_ ? 2 * g_.ly : g_.ly,
                      pad_ ? 2 * g_.lz : g_.lz};
    const double kx_max = 2.0 * pi / g_.lx * (g_.nx / 3);
    const double ky_max = 2.0 * pi / g_.ly * (g_.ny / 3);
    const double kz_max = 2.0 * pi / g_.lz * (g_.nz / 3);
    std::size_t idx = 0;
    for (int i = 0; i < px_; ++i)
      for (int j = 0; j < py_; ++j)
        for (int k = 0; k < pzh_; ++k, ++idx) {
          if (std::abs(pg.kx(i)) > kx_max || std::abs(pg.ky(j)) > ky_max ||
              std::abs(pg.kz(k)) > kz_max) {
            cp_[idx][0] = 0.0;
            cp_[idx][1] = 0.0;
          }
        }
  }

  GridSpec g_;
  double b_;
  bool pad_, dealias_;
  std::size_t n_ = 0, np_real_ = 0, np_cplx_ = 0, nc_un_ = 0;
  int px_ = 0, py_ = 0, pz_ = 0, pzh_ = 0, nzh_ = 0;
  double* rp_ = nullptr;
  fftw_complex* cp_ = nullptr;
  double* ru_ = nullptr;
  fftw_complex* cu_ = nullptr;
  fftw_plan fwd_pad_ = nullptr, bwd_pad_ = nullptr, fwd_un_ = nullptr, bwd_un_ = nullptr;
  std::vector<double> mult_, k2_, wgt_, rho_, phi_;
};

inline void renormalize(std::vector<double>& psi, double lambda, double cell_volume) {
  double m = 0.0;
  for (const double v : psi) m += v * v;
  m *= cell_volume;
  if (!(m > 0.0)) throw NumericError("renormalize: zero-mass iterate");
  const double s = std::sqrt(lambda / m);
  for (double& v : psi) v *= s;
}

inline Field default_init(const ReducedParams& r, const GridSpec& g,
                          const MinimizeOptions& opts) {
  const double lmin = std::min({g.lx, g.ly, g.lz});
  if (opts.init == InitMode::random) {
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    const double sigma = lmin / 8.0;
    Field f = sample(g, [&](double x, double y, double z) {
      return cdouble{std::exp(-(x * x + y * y + z * z) / (2.0 * sigma * sigma)), 0.0};
    });
    for (auto& v : f.values) v *= 1.0 + 0.5 * un(rng);
    return f;
  }

  double sr = lmin / 8.0, sz = lmin / 8.0;
  if (r.b > 1.0) {
    const UpperBound ub = upper_bound(r.b);
    if (r.lambda >= ub.value) {
      const AnsatzOptimum opt = optimal_ansatz(r.b, r.lambda);
      sr = opt.params.sigma_rho;
      sz = opt.params.sigma_z;
    } else if (r.lambda >= sobolev_lower_bound(r.b)) {
      // marginal-profile shape, mass-rescaled; binding is plausible here
      const F2Solution sol = solve_F2(r.b, ub.alpha_star);
      sr = 1.0 / std::sqrt(sol.y0);
      sz = sr / ub.alpha_star;
    }
  }
  sr = std::min(sr, std::min(g.lx, g.ly) / 6.0);
  sz = std::min(sz, g.lz / 6.0);
  return make_gaussian(g, r.lambda, sr, sz);
}

}  // namespace detail

// Mass-constrained minimization of E_b: projected gradient descent
// psi <- renormalize(|psi - tau h_psi|) with Barzilai-Borwein steps and a
// monotone backtracking line search, followed, when the line search becomes
// noise-limited, by a preconditioned residual-polish phase that drives the
// Euler-Lagrange residual to tol without energy comparisons.
inline MinimizeResult minimize(const ReducedParams& r, const GridSpec& grid,
                               const KernelSpec& spec, const MinimizeOptions& opts) {
  r.validate();
  grid.validate();
  require_positive(opts.tol, "tol");
  require(opts.max_iter >= 1, "max_iter must be >= 1");
  require(opts.backtrack > 0.0 && opts.backtrack < 1.0, "backtrack must be in (0,1)");

  detail::RealWorkspace ws(grid, spec, r.b, opts.pad, opts.dealias);
  const double cell = grid.cell_volume();
  const std::size_t n = grid.size();

  Field init;
  if (opts.init == InitMode::file) {
    require(opts.init_field.has_value(), "init=file requires an initial field");
    init = *opts.init_field;
    require(init.grid == grid, "initial field grid does not match run grid");
  } else {
    init = detail::default_init(r, grid, opts);
  }
  std::vector<double> psi(n);
  for (std::size_t i = 0; i < n; ++i) psi[i] = std::abs(init.values[i]);
  detail::renormalize(psi, r.lambda, cell);

  MinimizeResult out;
  std::vector<double> h(n), g(n), g_prev, psi_prev, trial(n), d, rvec(n), q(n), hq(n);
  auto e = ws.energy(psi);
  auto [mu, res] = ws.complete_gradient(psi, r.lambda, h);
  out.energy_history.push_back(e.E);
  auto project = [&]() {
    for (std::size_t i = 0; i < n; ++i) g[i] = h[i] - mu * psi[i];
  };
  project();

  int iter = 0;

  // Monotone Barzilai-Borwein descent until the line search can no longer
  // certify an energy decrease. The step direction is the constraint-tangent
  // gradient h - mu psi (the radial part would only be cancelled by the
  // renormalization anyway, at the cost of a vanishing stable step size).
  auto bb_phase = [&]() {
    double tau = opts.step0;
    bool have_prev = false, progressed = false;
    while (iter < opts.max_iter && res > opts.tol) {
      if (have_prev) {
        double ss = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double s = psi[i] - psi_prev[i];
          const double y = g[i] - g_prev[i];
          ss += s * s;
          sy += s * y;
        }
        if (sy > 0.0 && ss > 0.0) tau = std::clamp(ss / sy, 1e-7, 1e4);
      }
      psi_prev = psi;
      g_prev = g;
      have_prev = true;

      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = std::abs(psi[i] - tau * g[i]);
        detail::renormalize(trial, r.lambda, cell);
        const auto et = ws.energy(trial);
        if (et.E < e.E) {
          psi.swap(trial);
          e = et;
          std::tie(mu, res) = ws.complete_gradient(psi, r.lambda, h);
          project();
          out.energy_history.push_back(e.E);
          accepted = true;
          break;
        }
        tau *= opts.backtrack;
      }
      if (!accepted) return progressed;
      progressed = true;
      ++iter;
    }
    return progressed;
  };

  // Residual polish: preconditioned fixed-point steps accepted on residual
  // decrease; used when the energy comparison is at the round-off floor.
  // Iterates stay signed here: the magnitude fold injects broadband noise
  // exactly in the far tail that dominates the residual, so it is applied
  // once at the end instead of per step. On persistent rejection the
  // preconditioner shift c is stiffened.
  auto polish_phase = [&](int budget) {
    const bool dbg = std::getenv("GPLHY_DEBUG_POLISH") != nullptr;
    double ptau = 0.5;
    double cmul = 1.0;
    int rejects = 0, stiffenings = 0;
    bool progressed = false;
    for (int pit = 0; pit < budget && res > opts.tol &&
                      out.polish_iterations < opts.polish_max;
         ++pit) {
      const double c = cmul * std::max(1.0, -mu);
      for (std::size_t i = 0; i < n; ++i) rvec[i] = h[i] - mu * psi[i];
      ws.precondition(rvec, c, d);
      for (std::size_t i = 0; i < n; ++i) q[i] = psi[i] - ptau * d[i];
      detail::renormalize(q, r.lambda, cell);
      const auto eq = ws.energy(q);
      const auto [muq, resq] = ws.complete_gradient(q, r.lambda, hq);
      ++out.polish_iterations;
      if (dbg && (pit % 25 == 0 || resq >= res))
        std::fprintf(stderr, "polish %d: res %.3e -> %.3e tau %.3e c %.3g dE %.3e\n",
                     pit, res, resq, ptau, cmul * std::max(1.0, -mu), eq.E - e.E);
      if (resq < res && eq.E <= e.E + 1e-9 * (1.0 + std::abs(e.E))) {
        psi.swap(q);
        h.swap(hq);
        e = eq;
        mu = muq;
        res = resq;
        project();
        ptau = std::min(ptau * 1.2, 2.0);
        rejects = 0;
        progressed = true;
      } else {
        ptau *= 0.5;
        if (++rejects >= 8) {
          cmul *= 2.0;
          ptau = 0.5;
          rejects = 0;
          if (++stiffenings > 6) break;
        }
      }
    }
    return progressed;
  };

  bb_phase();
  bool polished = false;
  if (res > opts.tol) polished = polish_phase(opts.polish_max);

  // The polished field may carry far-tail values slightly below zero: the
  // discrete solution's tail rings at the spectral-truncation level, and
  // folding those cells back would re-inject exactly the broadband noise the
  // polish removed. The negativity is bounded by that dust level.
  (void)polished;

  out.field = Field(grid);
  for (std::size_t i = 0; i < n; ++i) out.field.values[i] = cdouble{psi[i], 0.0};
  out.breakdown.T = e.T;
  out.breakdown.I4 = e.I4;
  out.breakdown.Idd = e.Idd;
  out.breakdown.Q = e.Q;
  out.breakdown.I = e.I4 + e.Idd;
  out.breakdown.E = e.E;
  out.mu = mu;
  out.residual = res;
  out.iterations = iter;
  out.converged = res <= opts.tol;
  return out;
}

// One minimize per lambda, warm-started from the previous solution rescaled
// by sqrt(lambda_next/lambda_prev).
inline std::vector<CurvePoint> energy_curve(double b, const std::vector<double>& lambdas,
                                            const GridSpec& grid, const KernelSpec& spec,
                                            const MinimizeOptions& opts,
                                            std::vector<MinimizeResult>* results = nullptr) {
  require(!lambdas.empty(), "energy_curve: empty lambda list");
  for (std::size_t i = 0; i + 1 < lambdas.size(); ++i)
    require(lambdas[i] > 0.0 && lambdas[i] < lambdas[i + 1],
            "energy_curve: lambdas must be positive and increasing");

  std::vector<CurvePoint> curve;
  std::optional<Field> warm;
  for (double lam : lambdas) {
    MinimizeOptions o = opts;
    if (warm) {
      o.init = InitMode::file;
      o.init_field = warm;
    }
    const MinimizeResult res = minimize({b, lam}, grid, spec, o);
    curve.push_back({lam, res.breakdown.E, res.mu, res.converged});
    warm = res.field;  // renormalization to the next mass happens inside minimize
    if (results) results->push_back(res);
  }
  return curve;
}

// Theorem-1 dichotomy probe: bisection (in log lambda) on the predicate
// "minimize finds E < -eps_neg", eps_neg = 1e-5 lambda. Bound states are
// propagated as warm starts so the droplet branch is tracked down to the
// threshold.
inline CriticalMassResult critical_mass(double b, const GridSpec& grid,
                                        const KernelSpec& spec, const MinimizeOptions& opts,
                                        double rel_tol = 0.02) {
  if (!(b > 1.0)) throw std::domain_error("critical_mass requires b > 1");
  require_positive(rel_tol, "rel_tol");

  const double lower = sobolev_lower_bound(b);
  const UpperBound ub = upper_bound(b);
  double lo = 0.5 * lower;
  double hi = 2.0 * ub.value;

  CriticalMassResult out;
  std::optional<Field> droplet;

  auto probe = [&](double lam) {
    MinimizeOptions o = opts;
    if (droplet) {
      o.init = InitMode::file;
      o.init_field = droplet;
    }
    const MinimizeResult res = minimize({b, lam}, grid, spec, o);
    out.predicate_evaluations.push_back({lam, res.breakdown.E});
    const bool bound = res.breakdown.E < -1e-5 * lam;
    if (bound) droplet = res.field;
    return bound;
  };

  if (!probe(hi)) {
    std::ostringstream os;
    os << "critical_mass: predicate false at hi=" << hi
       << " (E=" << out.predicate_evaluations.back().second << ")";
    throw NumericError(os.str());
  }
  if (probe(lo)) {
    std::ostringstream os;
    os << "critical_mass: predicate true at lo=" << lo
       << " (E=" << out.predicate_evaluations.back().second << ")";
    throw NumericError(os.str());
  }

  while ((hi - lo) > rel_tol * std::sqrt(lo * hi)) {
    const double mid = std::sqrt(lo * hi);
    if (probe(mid))
      hi = mid;
    else
      lo = mid;
  }

  out.bracket = {lo, hi};
  out.lambda_c_estimate = std::sqrt(lo * hi);
  out.rel_width = (hi - lo) / out.lambda_c_estimate;
  return out;
}

// ---------------------------------------------------------------------------
// Box auto-sizing from the ansatz optimum. The predicted droplet core radius
// and half-length scale like 0.6 sigma and the tail decays at sqrt(-mu); the
// box must both contain the droplet with margin and resolve the tail.
// ---------------------------------------------------------------------------
inline GridSpec suggest_grid(double b, double lambda, int n = 64) {
  require_positive(b, "b");
  require_positive(lambda, "lambda");
  auto subcritical_box = [&]() {
    const double box = std::clamp(std::cbrt(1000.0 * lambda * lambda), 40.0, 2000.0);
    return GridSpec::cubic(n, box);
  };
  if (!(b > 1.0)) return subcritical_box();
  const UpperBound ub = upper_bound(b);
  if (lambda < sobolev_lower_bound(b)) return subcritical_box();

  double sr, sz;
  if (lambda >= ub.value) {
    const AnsatzOptimum opt = optimal_ansatz(b, lambda);
    sr = opt.params.sigma_rho;
    sz = opt.params.sigma_z;
  } else {
    const F2Solution sol = solve_F2(b, ub.alpha_star);
    sr = 1.0 / std::sqrt(sol.y0);
    sz = sr / ub.alpha_star;
  }
  const double mu_est =
      std::min(ansatz_mu_estimate(b, std::max(lambda, 1.001 * ub.value)), -1e-4);
  const double ld = 1.0 / std::sqrt(-mu_est);
  const double r0 = 0.6 * sr, z0 = 0.6 * sz;

  // contain the core plus ~11 tail e-folds per side; cap so the tail stays
  // resolved (a cell per e-fold at most)
  double lr = std::max(12.0 * r0, 2.0 * (r0 + 11.5 * ld));
  lr = std::max(std::min(lr, n * 0.8 * ld), 6.0 * r0);
  double lz = std::max(4.3 * z0, 2.0 * (z0 + 10.0 * ld));
  lz = std::max(std::min(lz, n * 1.0 * ld), 3.2 * z0);
  return GridSpec{n, n, n, lr, lr, lz};
}

}  // namespace gplhy
