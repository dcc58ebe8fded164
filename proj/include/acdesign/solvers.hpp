#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acdesign/criteria.hpp"

namespace acdesign {

struct SolveOptions {
  int grid_size = 257;
  int max_iterations = 2000;
  double weight_tolerance = 1e-4;
  int multistart_count = 4;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Control weight from the drug-only optimum: 1/(1 + rho_p), t2/(t1 + t2) at p = 0.
/// Non-block K is accepted only for p = -1 (rows split into the two arms).
Design compose_active_control(const InducedDesign& optimal_induced, const DrugModel& drug,
                              const ControlModel& control, const KMatrix& k, double p);

/// Drug-only D-optimal designs in closed form.
InducedDesign d_opt_mm_induced(const DrugModel& drug);
InducedDesign d_opt_emax_induced(const DrugModel& drug);

/// D-optimal designs for the full parameter vector (K = I).
Design d_opt_mm(const DrugModel& drug, const ControlModel& control);
Design d_opt_emax(const DrugModel& drug, const ControlModel& control);

/// Left-hand side of the interior-dose equation for the EMAX negative binomial / binomial cases.
double emax_equation_residual(const DrugModel& drug, double d);

struct ElfvingSolution {
  enum class Case { OnePoint, LeftThreshold, RightThreshold, TwoEndpoint };

  std::vector<double> doses;
  std::vector<double> weights;
  std::vector<int> signs;
  double gamma = 0.0;
  Case case_tag = Case::OnePoint;
  double delta = 0.0;  // c^T M_1^- c for the Elfving vectors f(d)
  double threshold_low = 0.0;
  double threshold_high = 0.0;
};

std::string_view to_string(ElfvingSolution::Case c);

/// Elfving vector f(d) whose outer products make up the dose-dependent information
/// (unit variance for the normal family).
Vector elfving_vector(const DrugModel& drug, double d);

/// c-optimal design for a Michaelis-Menten drug model with c along a mean gradient.
ElfvingSolution c_opt_elfving_2d(const DrugModel& drug, const Vector& c);

struct AcSolution {
  Design design;
  double target_dose = 0.0;
  double delta = 0.0;          // c^T M_1^- c with the model information
  double rho = 0.0;            // rho_{-1}
  double drug_share = 0.0;     // family-specific closed form
  double psi = 0.0;
  std::string method;
  std::optional<ElfvingSolution> elfving;
};

AcSolution ac_optimal_detailed(const DrugModel& drug, const ControlModel& control,
                               const SolveOptions& options = {});
Design ac_optimal(const DrugModel& drug, const ControlModel& control, const SolveOptions& options = {});

struct NumericResult {
  Design design;
  double criterion = 0.0;
  double max_violation = 0.0;
  bool converged = false;
  int iterations = 0;
  int best_start = 0;
};

NumericResult numeric_solve(const DrugModel& drug, const ControlModel& control,
                            const CriterionSpec& spec, const SolveOptions& options = {});

struct NumericInducedResult {
  InducedDesign design;
  double criterion = 0.0;
  double max_violation = 0.0;
  bool converged = false;
  int iterations = 0;
  int best_start = 0;
};

NumericInducedResult numeric_solve_induced(const DrugModel& drug, const Matrix& k11, double p,
                                           const SolveOptions& options = {});

/// Efficiencies against internally solved optima.
double d_efficiency(const Design& design, const DrugModel& drug, const ControlModel& control);
double ac_efficiency(const Design& design, const DrugModel& drug, const ControlModel& control,
                     const SolveOptions& options = {});

/// Closed-form D-optimal design when one applies (matched families), else nullopt.
std::optional<Design> d_optimal_closed_form(const DrugModel& drug, const ControlModel& control);

}  // namespace acdesign
