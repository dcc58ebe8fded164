#include <doctest.h>

#include <random>

#include "acdesign/errors.hpp"
#include "acdesign/model.hpp"
#include "oracles.hpp"

using namespace acdesign;
using doctest::Approx;

namespace {

const MeanFunction gout_curve = MeanFunction::emax(0.26, 0.73, 10.5);
const MeanFunction mm = MeanFunction::michaelis_menten(0.5, 2.0);

}  // namespace

TEST_CASE("mean values") {
  const DrugModel drug = DrugModel::normal(gout_curve, {0, 300}, 1.0);
  CHECK(mean(drug, 0.0) == Approx(0.26));
  CHECK(mean(DrugModel::binomial(mm, {0, 50}), 2.0) == Approx(0.25));
  // 0.9206 is reached near 99.95 (bisection oracle).
  double lo = 0, hi = 300;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.26 + 0.73 * mid / (10.5 + mid) < 0.9206 ? lo : hi) = mid;
  }
  CHECK(lo == Approx(99.9467).epsilon(1e-6));
  CHECK(mean(drug, lo) == Approx(0.9206).epsilon(1e-12));
  CHECK_THROWS_AS(mean(drug, 301.0), DomainError);
}

TEST_CASE("mean gradients") {
  CHECK(mm.gradient(0.0).norm() == 0.0);
  const Vector g = mm.gradient(2.0);
  CHECK(g(0) == Approx(0.5));
  // -theta1 d / (theta2 + d)^2 = -1/16; a finite-difference check below covers the general case.
  CHECK(g(1) == Approx(-0.0625));
  const Vector ge = gout_curve.gradient(10.5);
  CHECK(ge(0) == Approx(1.0));
  CHECK(ge(1) == Approx(0.5));
  CHECK(ge(2) == Approx(-0.73 / 42.0));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int i = 0; i < 20; ++i) {
    const oracle::Curve c{i % 2 == 0, u(rng), 2 * u(rng), 20 * u(rng)};
    const MeanFunction f = c.emax ? MeanFunction::emax(c.e0, c.em, c.ed) : MeanFunction::michaelis_menten(c.em, c.ed);
    const double d = 100 * u(rng);
    const Vector fd = oracle::curve_grad_fd(c, d);
    CHECK((f.gradient(d) - fd).norm() / fd.norm() < 1e-6);
    const double h = 1e-6 * d;
    CHECK(f.slope(d) == Approx((c.eta(d + h) - c.eta(d - h)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("drug information against hand-written formulas") {
  SUBCASE("normal block structure") {
    const Matrix m = fisher_drug(DrugModel::normal(mm, {0, 50}, 1.0), 2.0);
    Matrix want = Matrix::Zero(3, 3);
    want << 0.25, -0.03125, 0, -0.03125, 0.00390625, 0, 0, 0, 0.5;
    CHECK((m - want).norm() < 1e-14);
  }
  SUBCASE("binomial") {
    const Matrix m = fisher_drug(DrugModel::binomial(mm, {0, 50}), 2.0);
    CHECK(m(0, 0) == Approx(0.25 / 0.1875));
  }
  SUBCASE("all families agree with the oracle and are PSD") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      const bool emax = i % 2 == 1;
      const oracle::Curve c{emax, 0.05 + 0.2 * u(rng), 0.2 + 0.5 * u(rng), 1 + 20 * u(rng)};
      const MeanFunction f = emax ? MeanFunction::emax(c.e0, c.em, c.ed) : MeanFunction::michaelis_menten(c.em, c.ed);
      const DoseRange r{0, 100};
      const double d = 0.5 + 99 * u(rng);
      const int rr = 3;
      const std::pair<DrugModel, oracle::Fam> cases[] = {
          {DrugModel::normal(f, r, 0.7), oracle::Fam::Normal},
          {DrugModel::negbinomial(f, r, rr), oracle::Fam::NegBin},
          {DrugModel::binomial(f, r), oracle::Fam::Binom},
          {DrugModel::poisson(f, r), oracle::Fam::Poisson},
      };
      for (const auto& [model, fam] : cases) {
        const Matrix m = fisher_drug(model, d);
        const Matrix want = oracle::drug_info(fam, c, d, 0.7, rr);
        CHECK((m - want).norm() <= 1e-12 * want.norm());
        CHECK((m - m.transpose()).norm() <= 1e-14 * m.norm());
        Eigen::SelfAdjointEigenSolver<Matrix> es(m);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()));
      }
      // Negative binomial information is r / pi times the binomial one.
      const Matrix nb = fisher_drug(DrugModel::negbinomial(f, r, rr), d);
      const Matrix bi = fisher_drug(DrugModel::binomial(f, r), d);
      CHECK((nb - rr / c.eta(d) * bi).norm() <= 1e-12 * nb.norm());
    }
  }
  SUBCASE("Michaelis-Menten at dose zero") {
    const Matrix pz = fisher_drug(DrugModel::poisson(mm, {0, 50}), 0.0);
    CHECK(pz.norm() == 0.0);
    // Negative binomial: continuous limit of the information as d -> 0.
    const DrugModel nb = DrugModel::negbinomial(mm, {0, 50}, 4);
    const Matrix at0 = fisher_drug(nb, 0.0);
    const Matrix near0 = fisher_drug(nb, 1e-7);
    CHECK(at0.norm() > 0.0);
    CHECK((at0 - near0).norm() < 1e-5 * at0.norm());
  }
}

TEST_CASE("control information") {
  CHECK(fisher_control(ControlModel::binomial(0.5))(0, 0) == Approx(4.0));
  CHECK(fisher_control(ControlModel::poisson(0.9206))(0, 0) == Approx(1.0 / 0.9206));
  CHECK(fisher_control(ControlModel::negbinomial(0.9206, 10))(0, 0) == Approx(10.0 / (0.9206 * 0.9206 * 0.0794)));
  const Matrix n = fisher_control(ControlModel::normal(1.0, 2.0));
  CHECK(n(0, 0) == Approx(0.5));
  CHECK(n(1, 1) == Approx(0.125));
  CHECK(n(0, 1) == 0.0);
}

TEST_CASE("model validation") {
  // Success probability must stay below one: emax * R / (ed50 + R) >= 1 is rejected.
  CHECK_THROWS_AS(DrugModel::binomial(MeanFunction::michaelis_menten(1.2, 2.0), {0, 50}), ValidationError);
  CHECK_THROWS_AS(DrugModel::negbinomial(MeanFunction::michaelis_menten(1.2, 2.0), {0, 50}, 3), ValidationError);
  CHECK_THROWS_AS(DrugModel::normal(mm, {5, 5}, 1.0), ValidationError);
  CHECK_THROWS_AS(DrugModel::normal(mm, {0, 5}, 0.0), ValidationError);
  CHECK_THROWS_AS(MeanFunction::michaelis_menten(0.5, 0.0), ValidationError);
  CHECK_THROWS_AS(ControlModel::binomial(1.0), ValidationError);
  CHECK_THROWS_AS(ControlModel::poisson(0.0), ValidationError);
  CHECK(DrugModel::normal(gout_curve, {0, 300}, 1.0).parameter_count() == 4);
  CHECK(DrugModel::poisson(mm, {0, 300}).parameter_count() == 2);
}

TEST_CASE("target dose") {
  CHECK(target_dose(DrugModel::binomial(gout_curve, {0, 300}), ControlModel::binomial(0.9206)) ==
        Approx(100.0).epsilon(1e-3));
  const MeanFunction mig = MeanFunction::emax(0.098, 0.2052, 12.3);
  CHECK(target_dose(DrugModel::binomial(mig, {0, 200}), ControlModel::binomial(0.2505)) == Approx(35.6).epsilon(3e-3));
  CHECK(target_dose(DrugModel::poisson(mm, {0, 50}), ControlModel::poisson(0.25)) == Approx(2.0));
  CHECK_THROWS_AS(target_dose(DrugModel::poisson(mm, {0, 50}), ControlModel::poisson(0.6)), NoTargetDose);
  // Negative binomial compares expected counts r(1 - p)/p on both arms.
  CHECK(target_dose(DrugModel::negbinomial(gout_curve, {0, 300}, 10), ControlModel::negbinomial(0.9206, 10)) ==
        Approx(99.9467).epsilon(1e-6));
}

TEST_CASE("target-dose gradient") {
  const DrugModel drug = DrugModel::normal(gout_curve, {0, 300}, 0.01);
  const ControlModel control = ControlModel::normal(0.9206, 0.02);
  const TargetDoseGradient g = target_dose_grad(drug, control);
  CHECK(g.drug.size() == 4);
  CHECK(g.control.size() == 2);
  CHECK(g.drug(3) == 0.0);
  CHECK(g.control(1) == 0.0);

  const DrugModel bd = DrugModel::binomial(gout_curve, {0, 300});
  const double mu = 0.9206, h = 1e-6;
  const double fd = (target_dose(bd, ControlModel::binomial(mu + h)) - target_dose(bd, ControlModel::binomial(mu - h))) /
                    (2 * h);
  const double dstar = target_dose(bd, ControlModel::binomial(mu));
  CHECK(target_dose_grad(bd, ControlModel::binomial(mu)).control(0) == Approx(fd).epsilon(1e-5));
  CHECK(fd == Approx(1.0 / gout_curve.slope(dstar)).epsilon(1e-5));

  const DrugModel md = DrugModel::poisson(mm, {0, 50});
  const Vector gm = target_dose_grad(md, ControlModel::poisson(0.25)).drug;
  const double fd2 = (target_dose(DrugModel::poisson(MeanFunction::michaelis_menten(0.5, 2 + h), {0, 50}),
                                  ControlModel::poisson(0.25)) -
                      target_dose(DrugModel::poisson(MeanFunction::michaelis_menten(0.5, 2 - h), {0, 50}),
                                  ControlModel::poisson(0.25))) /
                     (2 * h);
  CHECK(gm(1) > 0.0);
  CHECK(gm(1) == Approx(fd2).epsilon(1e-5));
}
