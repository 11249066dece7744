#pragma once

#include <json.hpp>

#include <cmath>
#include <string>

#include "gplhy/bounds.hpp"
#include "gplhy/diagnostics.hpp"
#include "gplhy/grid.hpp"
#include "gplhy/minimize.hpp"

namespace gplhy {

inline constexpr const char* kVersion = "0.1.0";

inline nlohmann::json grid_json(const GridSpec& g) {
  return {{"nx", g.nx}, {"ny", g.ny}, {"nz", g.nz},
          {"Lx", g.lx}, {"Ly", g.ly}, {"Lz", g.lz}};
}

inline nlohmann::json bounds_json(const BoundsReport& r) {
  const double scale = std::pow(r.b - 1.0, 2.5);
  return {{"lower", r.lower},
          {"lower_numeric", r.lower_numeric},
          {"upper_numeric", r.upper_numeric},
          {"alpha_star", r.alpha_star},
          {"upper_closed_form_at_alpha_star", r.upper_closed_form_at_alpha_star},
          {"lower_scaled", r.lower * scale},
          {"upper_scaled", r.upper_numeric * scale},
          {"paper_scaled_constant", 84.437},
          {"discrepancy_note", r.discrepancy_note}};
}

// Full run report. All keys are always present; sections that do not apply
// carry null.
inline nlohmann::json make_report(double b, double lambda, const GridSpec& grid,
                                  const MinimizeResult& res, const VirialReport& vir,
                                  double yukawa, const DecayReport* decay,
                                  const BoundsReport* bounds) {
  nlohmann::json j;
  j["b"] = b;
  j["lambda"] = lambda;
  j["grid"] = grid_json(grid);
  j["energy"] = {{"total", res.breakdown.E},
                 {"kinetic", res.breakdown.T},
                 {"quartic", res.breakdown.I4},
                 {"dipolar", res.breakdown.Idd},
                 {"quintic", res.breakdown.Q}};
  j["mu"] = res.mu;
  j["residual"] = res.residual;
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["virial"] = {{"identity1", vir.res_identity1},
                 {"identity2", vir.res_identity2},
                 {"identity3", vir.res_identity3},
                 {"dilation", vir.res_dilation},
                 {"mu_sign_ok", vir.mu_sign_ok}};
  j["yukawa_residual"] = std::isfinite(yukawa) ? nlohmann::json(yukawa) : nlohmann::json();
  if (decay)
    j["decay"] = {{"t_fit", decay->t_fit}, {"r2", decay->r_squared}};
  else
    j["decay"] = {{"t_fit", nullptr}, {"r2", nullptr}};
  j["bounds"] = bounds ? bounds_json(*bounds) : nlohmann::json();
  j["version"] = kVersion;
  return j;
}

}  // namespace gplhy
