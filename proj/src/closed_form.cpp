#include <algorithm>
#include <cmath>
#include <string>

#include "acdesign/errors.hpp"
#include "acdesign/scalar_search.hpp"
#include "acdesign/solvers.hpp"

namespace acdesign {

namespace {

void require_matched(const DrugModel& drug, const ControlModel& control) {
  if (drug.family() != control.family()) {
    throw ValidationError("closed-form designs need the same family for drug (" +
                          std::string(to_string(drug.family())) + ") and control (" +
                          std::string(to_string(control.family())) + ")");
  }
}

InducedDesign equal_weights(std::vector<double> doses) {
  InducedDesign out;
  out.weights.assign(doses.size(), 1.0 / static_cast<double>(doses.size()));
  out.doses = std::move(doses);
  return out;
}

// Root of the EMAX interior-dose equation on (L, R): sign-change scan, bisection, Newton polish.
double emax_interior_root(const DrugModel& drug) {
  const double lo = drug.range().lower;
  const double hi = drug.range().upper;
  const double eps = 1e-9 * (hi - lo);
  const double a = lo + eps;
  const double b = hi - eps;
  auto f = [&](double d) { return emax_equation_residual(drug, d); };

  constexpr int kPieces = 64;
  int brackets = 0;
  double left = a;
  double right = b;
  double prev_x = a;
  double prev_f = f(a);
  for (int i = 1; i <= kPieces; ++i) {
    const double x = a + (b - a) * i / kPieces;
    const double fx = f(x);
    if (std::isfinite(prev_f) && std::isfinite(fx) && ((prev_f < 0.0) != (fx < 0.0))) {
      ++brackets;
      left = prev_x;
      right = x;
    }
    prev_x = x;
    prev_f = fx;
  }
  if (brackets == 0) throw InfeasibleGeometry("interior dose equation has no root in (L, R)");
  if (brackets > 1) throw InfeasibleGeometry("interior dose equation has several roots in (L, R)");

  double fl = f(left);
  for (int it = 0; it < 200 && right - left > 0.0; ++it) {
    const double mid = 0.5 * (left + right);
    if (mid <= left || mid >= right) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (fl < 0.0)) {
      left = mid;
      fl = fm;
    } else {
      right = mid;
    }
  }
  double x = 0.5 * (left + right);
  const double h = 1e-7 * (1.0 + std::abs(x));
  const double slope = (f(x + h) - f(x - h)) / (2.0 * h);
  if (std::isfinite(slope) && slope != 0.0) {
    const double polished = x - f(x) / slope;
    if (polished >= left && polished <= right && std::abs(f(polished)) <= std::abs(f(x))) x = polished;
  }
  return x;
}

double emax_poisson_dose(const DrugModel& drug) {
  const auto& m = drug.mean();
  const double t0 = m.e0(), t1 = m.emax(), t2 = m.ed50();
  const double lo = drug.range().lower, hi = drug.range().upper;
  auto mm = [&](double d) { return t0 * t2 + t1 * d + t0 * d; };
  const double ml = mm(lo), mr = mm(hi);
  const double kappa = std::pow((t2 + lo) * mr + (t2 + hi) * ml, 2) + 12.0 * (t2 + lo) * (t2 + hi) * mr * ml;
  if (kappa < 0.0) throw InfeasibleGeometry("negative discriminant in the Poisson EMAX dose");
  const double sk = std::sqrt(kappa);
  const double num = 4.0 * ml * mr - t1 * (lo * mr + hi * ml) - t0 * sk;
  const double den = -4.0 * ml * mr - t1 * t2 * (mr + ml) + (t1 + t0) * sk;
  const double d = t2 * num / den;
  if (!(d > lo && d < hi)) throw InfeasibleGeometry("Poisson EMAX interior dose outside (L, R)");
  return d;
}

}  // namespace

void SolveOptions::validate() const {
  if (grid_size < 3) throw ValidationError("solver grid needs at least 3 points");
  if (max_iterations < 1) throw ValidationError("solver max_iterations must be positive");
  if (!(weight_tolerance > 0.0 && weight_tolerance < 1.0)) {
    throw ValidationError("solver weight_tolerance must lie in (0, 1)");
  }
  if (multistart_count < 1) throw ValidationError("solver multistart_count must be positive");
}

Design compose_active_control(const InducedDesign& optimal_induced, const DrugModel& drug,
                              const ControlModel& control, const KMatrix& k, double p) {
  double rho = 0.0;
  if (k.is_block()) {
    if (k.k11().rows() != drug.parameter_count() || k.k22().rows() != control.parameter_count()) {
      throw ValidationError("K blocks do not match the parameter dimensions");
    }
    if (p == 0.0) return with_control(optimal_induced, static_cast<double>(k.t2()) / (k.t1() + k.t2()));
    rho = rho_p(optimal_induced, drug, control, k, p);
  } else {
    if (p != -1.0) {
      throw Unsupported("composition needs a block K unless p = -1; use the numeric solver");
    }
    const int s1 = drug.parameter_count();
    const int s2 = control.parameter_count();
    if (k.full().rows() != s1 + s2) throw ValidationError("K does not match the parameter dimensions");
    const Matrix k11 = k.full().topRows(s1);
    const Matrix k22 = k.full().bottomRows(s2);
    const InfoMatrix m1 = make_info(drug_information(optimal_induced, drug));
    const InfoMatrix i2 = make_info(fisher_control(control));
    if (!estimable(k11, m1)) throw NotEstimable("drug arm: K11 is not estimable under the drug design");
    if (!estimable(k22, i2)) throw NotEstimable("control arm: K22 is not estimable");
    const double t1 = (k11.transpose() * pseudo_inverse(m1) * k11).trace();
    const double t2 = (k22.transpose() * pseudo_inverse(i2) * k22).trace();
    rho = std::sqrt(t1 / t2);
  }
  return with_control(optimal_induced, 1.0 / (1.0 + rho));
}

InducedDesign d_opt_mm_induced(const DrugModel& drug) {
  const auto& m = drug.mean();
  if (m.kind() != MeanFunction::Kind::MichaelisMenten) {
    throw ValidationError("d_opt_mm needs a Michaelis-Menten mean");
  }
  const double t1 = m.emax(), t2 = m.ed50();
  const double lo = drug.range().lower, hi = drug.range().upper;
  double x = lo;
  switch (drug.family()) {
    case Family::Normal: x = t2 * hi / (2.0 * t2 + hi); break;
    case Family::NegBinomial: x = lo; break;
    case Family::Binomial: {
      const double root = std::sqrt(9.0 * hi * hi - 8.0 * hi * hi * t1 + 18.0 * hi * t2 -
                                    8.0 * hi * t1 * t2 + 9.0 * t2 * t2);
      x = (t2 * hi + 3.0 * t2 * t2 - t2 * root) / (4.0 * t1 * t2 - 4.0 * hi + 4.0 * hi * t1 - 6.0 * t2);
      break;
    }
    case Family::Poisson: x = t2 * hi / (3.0 * t2 + 2.0 * hi); break;
  }
  x = std::max(lo, x);
  if (!(x < hi)) throw InfeasibleGeometry("interior D-optimal dose is not below R");
  return equal_weights({x, hi});
}

double emax_equation_residual(const DrugModel& drug, double d) {
  const auto& m = drug.mean();
  if (m.kind() != MeanFunction::Kind::Emax) throw ValidationError("EMAX equation needs an Emax mean");
  const double t0 = m.e0(), t1 = m.emax(), t2 = m.ed50();
  const double lo = drug.range().lower, hi = drug.range().upper;
  const double common = 2.0 / (d - lo) + 2.0 / (d - hi) -
                        (t0 + t1 - 1.0) / (d * (t0 + t1 - 1.0) + (t0 - 1.0) * t2);
  const double pi_term = (t0 + t1) / (t0 * (t2 + d) + t1 * d);
  switch (drug.family()) {
    case Family::NegBinomial: return common - 2.0 * pi_term - 1.0 / (t2 + d);
    case Family::Binomial: return common - pi_term - 2.0 / (t2 + d);
    default: throw Unsupported("interior dose equation applies to negative binomial and binomial models");
  }
}

InducedDesign d_opt_emax_induced(const DrugModel& drug) {
  const auto& m = drug.mean();
  if (m.kind() != MeanFunction::Kind::Emax) throw ValidationError("d_opt_emax needs an Emax mean");
  const double t2 = m.ed50();
  const double lo = drug.range().lower, hi = drug.range().upper;
  double x = 0.0;
  switch (drug.family()) {
    case Family::Normal: x = (hi * (lo + t2) + lo * (hi + t2)) / ((lo + t2) + (hi + t2)); break;
    case Family::NegBinomial:
    case Family::Binomial: x = emax_interior_root(drug); break;
    case Family::Poisson: x = emax_poisson_dose(drug); break;
  }
  return equal_weights({lo, x, hi});
}

Design d_opt_mm(const DrugModel& drug, const ControlModel& control) {
  require_matched(drug, control);
  return compose_active_control(d_opt_mm_induced(drug), drug, control,
                                KMatrix::identity(drug.parameter_count(), control.parameter_count()), 0.0);
}

Design d_opt_emax(const DrugModel& drug, const ControlModel& control) {
  require_matched(drug, control);
  return compose_active_control(d_opt_emax_induced(drug), drug, control,
                                KMatrix::identity(drug.parameter_count(), control.parameter_count()), 0.0);
}

std::optional<Design> d_optimal_closed_form(const DrugModel& drug, const ControlModel& control) {
  if (drug.family() != control.family()) return std::nullopt;
  if (drug.mean().kind() == MeanFunction::Kind::MichaelisMenten) return d_opt_mm(drug, control);
  return d_opt_emax(drug, control);
}

}  // namespace acdesign
