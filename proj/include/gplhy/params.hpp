#pragma once

#include <cmath>
#include <utility>

#include "gplhy/common.hpp"

namespace gplhy {

// Physical-side parameters of the energy functional: contact coupling a_s,
// dipolar coupling a_dd, quantum-fluctuation coefficient in front of the
// quintic term, and the particle number N = ||psi||_{L^2}^2.
struct PhysicalParams {
  double a_s = 1.0;
  double a_dd = 1.0;
  double gamma_qf = 1.0;
  double n_atoms = 1.0;

  void validate() const {
    require_positive(a_s, "a_s");
    require_positive(a_dd, "a_dd");
    require_positive(gamma_qf, "gamma_QF");
    require_positive(n_atoms, "N");
  }
};

// Reduced problem after rescaling away a_s and gamma_QF: only the ratio
// b = a_dd/a_s and the reduced mass constraint lambda remain.
struct ReducedParams {
  double b = 2.0;
  double lambda = 1.0;

  void validate() const {
    require_positive(b, "b");
    require_positive(lambda, "lambda");
  }
};

// Amplitude/length scales of the reduction, fixed by
//   alpha * ell * a_s = 1   and   alpha^{3/2} * ell^{5/2} * gamma_QF = 1.
struct ScaleFactors {
  double alpha = 1.0;
  double ell = 1.0;
  double energy_scale = 1.0;  // = alpha * ell^2

  void validate() const {
    require_positive(alpha, "alpha");
    require_positive(ell, "ell");
    require_positive(energy_scale, "energy_scale");
    const double expected = alpha * ell * ell;
    if (std::abs(energy_scale - expected) > 1e-12 * expected)
      throw std::domain_error("inconsistent scale factors: energy_scale != alpha*ell^2");
  }
};

inline std::pair<ReducedParams, ScaleFactors> to_reduced(const PhysicalParams& p) {
  p.validate();
  ScaleFactors s;
  s.alpha = p.gamma_qf * std::pow(p.a_s, -2.5);
  s.ell = std::pow(p.a_s, 1.5) / p.gamma_qf;
  s.energy_scale = s.alpha * s.ell * s.ell;  // = sqrt(a_s)/gamma_QF
  ReducedParams r;
  r.b = p.a_dd / p.a_s;
  r.lambda = p.n_atoms / s.alpha;  // N = alpha * lambda
  return {r, s};
}

inline PhysicalParams to_physical(const ReducedParams& r, const ScaleFactors& s) {
  r.validate();
  s.validate();
  PhysicalParams p;
  p.a_s = 1.0 / (s.alpha * s.ell);
  p.gamma_qf = std::pow(s.alpha, -1.5) * std::pow(s.ell, -2.5);
  p.a_dd = r.b * p.a_s;
  p.n_atoms = s.alpha * r.lambda;
  return p;
}

}  // namespace gplhy
