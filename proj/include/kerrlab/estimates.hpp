#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrlab/evolution.hpp"

namespace kerrlab::estimates {

class EstimateError : public std::runtime_error {
 public:
  explicit EstimateError(const std::string& what) : std::runtime_error(what) {}
};

struct Term {
  std::string name;
  double value = 0.0;
};

// lhs <= C * sum(rhs_terms); C = lhs / sum.
struct Estimate {
  std::string id;
  double lhs = 0.0;
  std::vector<Term> rhs_terms;
  double rhs = 0.0;
  double C = 0.0;         // NaN when vacuous, inf when only the rhs vanishes
  bool vacuous = false;   // both sides zero
};

struct CoreEstimateReport {
  KerrParams kp;
  double T = 0.0;
  std::array<Estimate, 5> core;  // I .. V
  // E_F(T) + E_FI(T) + bulks against E_F(0) + E_FI(0)
  Estimate energy_bound;
  // B_pm + B_0 + B_1 + B_20 against E_F(T) + E_F(0) + E_FI(T) + E_FI(0)
  Estimate morawetz;
};

// Needs a coupled run (FI and Maxwell) started at t = 0 with a sample at T.
CoreEstimateReport evaluate_core_estimates(const KerrParams& kp, const evolution::DiagnosticSeries& s, double T);

// Relative spread of each constant across reports (max |C - C_0| / C_0),
// for refinement or window doubling; reports[0] is the reference.
struct Trend {
  std::vector<std::string> labels;
  std::array<double, 5> spread{};
  double energy_bound = 0.0;
  double morawetz = 0.0;
  double worst() const;
};

Trend trend(const std::vector<CoreEstimateReport>& reports, std::vector<std::string> labels = {});

// int_0^t int (|E - E_stat|^2 + |B - B_stat|^2) dr d omega dt with the
// stationary Coulomb part fixed by the charge of the initial data.
struct CoulombConvergence {
  cplx q;
  std::vector<double> t;
  std::vector<double> integral;
  double initial_energy = 0.0;  // E_F(0) + E_FI(0)
  // integral(T) / integral(T/2) - 1
  double plateau() const;
};

CoulombConvergence coulomb_convergence_check(const KerrParams& kp, const evolution::GridSpec& g,
                                             const evolution::InitialData& d, const evolution::RunConfig& cfg,
                                             double charge_radius);

}  // namespace kerrlab::estimates
