#include <doctest.h>

#include <sstream>

#include "acdesign/equivalence.hpp"
#include "acdesign/errors.hpp"
#include "acdesign/solvers.hpp"

using namespace acdesign;
using doctest::Approx;

namespace {

const MeanFunction mm = MeanFunction::michaelis_menten(0.5, 2.0);
const MeanFunction gout_curve = MeanFunction::emax(0.26, 0.73, 10.5);

struct Case {
  DrugModel drug;
  ControlModel control;
};

std::vector<Case> closed_form_cases() {
  std::vector<Case> out;
  for (const MeanFunction& f : {mm, gout_curve}) {
    const DoseRange r = f.kind() == MeanFunction::Kind::Emax ? DoseRange{0, 300} : DoseRange{0, 50};
    out.push_back({DrugModel::normal(f, r, 0.5), ControlModel::normal(0.3, 0.8)});
    out.push_back({DrugModel::negbinomial(f, r, 6), ControlModel::negbinomial(0.4, 6)});
    out.push_back({DrugModel::binomial(f, r), ControlModel::binomial(0.4)});
    out.push_back({DrugModel::poisson(f, r), ControlModel::poisson(0.4)});
  }
  return out;
}

CriterionSpec d_spec(const Case& c) {
  return CriterionSpec::phi(0.0, KMatrix::identity(c.drug.parameter_count(), c.control.parameter_count()));
}

}  // namespace

TEST_CASE("closed-form designs are certified optimal") {
  for (const Case& c : closed_form_cases()) {
    CAPTURE(to_string(c.drug.family()));
    const Design d = *d_optimal_closed_form(c.drug, c.control);
    const SensitivityReport r = verify(d, c.drug, c.control, d_spec(c));
    CHECK(r.verdict == Verdict::Optimal);
    CHECK(r.max_violation <= 1e-5);
    for (double res : r.support_residuals) CHECK(std::abs(res) <= 1e-6);
    // The control weight from the composition is exactly optimal.
    REQUIRE(r.control_value.has_value());
    CHECK(std::abs(*r.control_value) <= 1e-9);
    CHECK(r.grid_doses.size() == r.values.size());
  }
}

TEST_CASE("AC-optimal designs are certified optimal") {
  for (const Case& c : closed_form_cases()) {
    CAPTURE(to_string(c.drug.family()));
    if (c.drug.mean().kind() == MeanFunction::Kind::Emax && c.control.mu() < c.drug.mean().value(0.0)) continue;
    const Design d = ac_optimal(c.drug, c.control);
    const SensitivityReport r = verify(d, c.drug, c.control, CriterionSpec::ac());
    CHECK(r.verdict == Verdict::Optimal);
  }
}

TEST_CASE("suboptimal designs are rejected") {
  const DrugModel drug = DrugModel::poisson(mm, {0, 50});
  const ControlModel control = ControlModel::poisson(0.3);
  const CriterionSpec spec = CriterionSpec::phi(0.0, KMatrix::identity(2, 1));

  const Design flat({DesignPoint::drug(0), DesignPoint::drug(25), DesignPoint::drug(50), DesignPoint::control()},
                    {0.25, 0.25, 0.25, 0.25});
  const SensitivityReport r = verify(flat, drug, control, spec);
  CHECK(r.verdict == Verdict::NotOptimal);
  CHECK(phi_p(flat, drug, control, spec.k.value(), 0.0) < phi_p(d_opt_mm(drug, control), drug, control, *spec.k, 0.0));

  // Moving 10% of the mass off the optimum leaves a positive violation.
  const Design opt = d_opt_mm(drug, control);
  std::vector<double> w = opt.weights();
  w[0] -= 0.1;
  w[1] += 0.1;
  const SensitivityReport moved = verify(Design(opt.points(), w), drug, control, spec);
  CHECK(moved.max_violation > 1e-3);
  CHECK(moved.verdict == Verdict::NotOptimal);
}

TEST_CASE("verdict does not depend on the grid once it is fine enough") {
  const DrugModel drug = DrugModel::binomial(gout_curve, {0, 300});
  const ControlModel control = ControlModel::binomial(0.8);
  const CriterionSpec spec = CriterionSpec::phi(-1.0, KMatrix::identity(3, 1));
  const NumericResult solved = numeric_solve(drug, control, spec);
  const Design flat = Design::normalized(
      {DesignPoint::drug(0), DesignPoint::drug(50), DesignPoint::drug(150), DesignPoint::drug(300), DesignPoint::control()},
      {1, 1, 1, 1, 1});
  for (const Design* d : {&solved.design, &flat}) {
    const SensitivityReport coarse = verify(*d, drug, control, spec, {200, 1e-5});
    const SensitivityReport fine = verify(*d, drug, control, spec, {2000, 1e-5});
    CHECK(coarse.verdict == fine.verdict);
    CHECK(coarse.max_violation == Approx(fine.max_violation).epsilon(1e-6).scale(1e-6));
  }
}

TEST_CASE("sensitivity and reporting") {
  const DrugModel drug = DrugModel::normal(gout_curve, {0, 300}, 0.0025);
  const ControlModel control = ControlModel::normal(0.9206, 0.0025);
  const Design d = d_opt_emax(drug, control);
  const KMatrix k = KMatrix::identity(4, 2);
  for (const auto& pt : d.points()) CHECK(std::abs(sensitivity(d, drug, control, k, 0.0, pt)) <= 1e-6 * 6);
  CHECK(sensitivity(d, drug, control, k, 0.0, DesignPoint::drug(150)) < 0.0);

  const SensitivityReport r = verify(d, drug, control, CriterionSpec::phi(0.0, k), {5, 1e-5});
  std::ostringstream out;
  write_sensitivity_csv(out, r);
  const std::string csv = out.str();
  CHECK(csv.rfind("dose,value\n", 0) == 0);
  CHECK(csv.find("\nC,") != std::string::npos);

  CHECK_THROWS_AS(verify(d, drug, control, CriterionSpec::phi(0.0, k), {1, 1e-5}), DomainError);
  CHECK_THROWS_AS(verify(Design({DesignPoint::drug(400), DesignPoint::control()}, {0.5, 0.5}), drug, control,
                         CriterionSpec::phi(0.0, k)),
                  DomainError);
  CHECK_THROWS_AS(verify(Design({DesignPoint::drug(40), DesignPoint::control()}, {0.5, 0.5}), drug, control,
                         CriterionSpec::phi(0.0, k)),
                  NotEstimable);
}

TEST_CASE("singular c-optimal design is accepted through a generalized inverse") {
  const DrugModel drug = DrugModel::normal(mm, {0, 50}, 1.0);
  const ControlModel control = ControlModel::normal(mm.value(10.0), 1.0);
  const Design d = ac_optimal(drug, control);
  const SensitivityReport r = verify(d, drug, control, CriterionSpec::ac());
  CHECK(r.verdict == Verdict::Optimal);
}
