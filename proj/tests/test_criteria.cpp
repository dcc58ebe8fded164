#include <doctest.h>

#include <cmath>
#include <random>

#include "acdesign/criteria.hpp"
#include "acdesign/errors.hpp"
#include "acdesign/solvers.hpp"
#include "oracles.hpp"

using namespace acdesign;
using doctest::Approx;

namespace {

Matrix diag(std::initializer_list<double> v) {
  Vector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

Matrix random_spd(std::mt19937_64& rng, int t) {
  std::normal_distribution<double> n01;
  Matrix a(t, t);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < t; ++j) a(i, j) = n01(rng);
  return a * a.transpose() + 0.1 * Matrix::Identity(t, t);
}

const MeanFunction gout_curve = MeanFunction::emax(0.26, 0.73, 10.5);

}  // namespace

TEST_CASE("phi_p on moment matrices") {
  for (double p : {0.0, -1.0, -3.0, 0.5, kMinusInfinity}) CHECK(phi_from_moment(Matrix::Identity(3, 3), p) == Approx(1.0));
  CHECK(phi_from_moment(diag({1, 4}), 0.0) == Approx(0.5));
  CHECK(phi_from_moment(diag({1, 4}), -1.0) == Approx(0.4));
  CHECK(phi_from_moment(diag({1, 4}), -1.0 + 1e-7) == Approx(0.4).epsilon(1e-6));
  CHECK(phi_from_moment(diag({1, 4}), kMinusInfinity) == Approx(0.25));
  CHECK_THROWS_AS(phi_from_moment(diag({1, 4}), 1.0), DomainError);

  std::mt19937_64 rng(21);
  for (int i = 0; i < 20; ++i) {
    const int t = 1 + i % 3;
    const Matrix b = random_spd(rng, t);
    for (double p : {0.0, -1.0, -2.0, 0.3, kMinusInfinity}) {
      const double v = phi_from_moment(b, p);
      CHECK(v == Approx(oracle::phi(b, p)).epsilon(1e-12));
      // Scaling M by lambda divides K^T M^- K by lambda.
      CHECK(phi_from_moment(b / 2.5, p) == Approx(2.5 * v).epsilon(1e-12));
    }
    const double d = phi_from_moment(b, 0.0);
    CHECK(std::abs(phi_from_moment(b, 1e-6) - d) <= 1e-4 * d);
    CHECK(std::abs(phi_from_moment(b, -1e-6) - d) <= 1e-4 * d);
    // The averaged power mean overshoots the E-value by at most a factor t^(1/50).
    const double e = phi_from_moment(b, kMinusInfinity);
    const double gap = phi_from_moment(b, -50.0) - e;
    CHECK(gap >= -1e-12 * e);
    CHECK(gap <= e * (std::pow(t, 1.0 / 50.0) - 1.0) + 1e-12 * e);
    if (t == 1) CHECK(std::abs(gap) <= 1e-3);
  }
}

TEST_CASE("phi_p on designs agrees with the oracle and is homogeneous") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const DrugModel drug = DrugModel::binomial(gout_curve, {0, 300});
  const ControlModel control = ControlModel::binomial(0.9206);
  const oracle::Curve c{true, 0.26, 0.73, 10.5};
  for (int i = 0; i < 10; ++i) {
    const std::vector<double> doses = {0.0, 5 + 20 * u(rng), 50 + 200 * u(rng), 300.0};
    std::vector<double> w = {u(rng) + 0.1, u(rng) + 0.1, u(rng) + 0.1, u(rng) + 0.1, u(rng) + 0.1};
    std::vector<DesignPoint> pts;
    for (double d : doses) pts.push_back(DesignPoint::drug(d));
    pts.push_back(DesignPoint::control());
    const Design design = Design::normalized(pts, w);

    oracle::Mat m = oracle::Mat::Zero(4, 4);
    for (std::size_t j = 0; j < doses.size(); ++j)
      m.topLeftCorner(3, 3) += design.weights()[j] * oracle::drug_info(oracle::Fam::Binom, c, doses[j]);
    m(3, 3) = design.control_weight() * oracle::control_info(oracle::Fam::Binom, 0.9206)(0, 0);
    const KMatrix k = KMatrix::identity(3, 1);
    for (double p : {0.0, -1.0, kMinusInfinity}) {
      const double want = oracle::phi(m.inverse(), p);
      CHECK(phi_p(design, drug, control, k, p) == Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("reduced criterion and estimability") {
  const DrugModel drug = DrugModel::normal(MeanFunction::michaelis_menten(0.5, 2.0), {0, 50}, 1.0);
  const InducedDesign two{{1.852, 50}, {0.5, 0.5}};
  const Matrix m1 = drug_information(two, drug);
  const Matrix k11 = Matrix::Identity(3, 3);
  CHECK(phi_p_reduced(two, drug, k11, 0.0) == Approx(oracle::phi(m1.inverse(), 0.0)));
  const InducedDesign one{{5.0}, {1.0}};
  CHECK_THROWS_AS(phi_p_reduced(one, drug, k11, 0.0), NotEstimable);
  const Matrix c = drug.mean().gradient(5.0);
  Matrix kc = Matrix::Zero(3, 1);
  kc.topRows(2) = c;
  CHECK(phi_p_reduced(one, drug, kc, -1.0) > 0.0);
}

TEST_CASE("rho_p") {
  const DrugModel drug = DrugModel::binomial(gout_curve, {0, 300});
  const ControlModel control = ControlModel::binomial(0.9206);
  const InducedDesign opt = d_opt_emax_induced(drug);
  CHECK(rho_p(opt, drug, control, KMatrix::identity(3, 1), 0.0) == Approx(3.0));
  CHECK(rho_p(opt, drug, control, KMatrix::identity(3, 1), 1e-6) == Approx(3.0).epsilon(1e-4));
  CHECK(rho_p(opt, drug, control, KMatrix::identity(3, 1), -1e-6) == Approx(3.0).epsilon(1e-4));

  SUBCASE("p = -1 with scalar blocks is a square-root variance ratio") {
    const DrugModel pd = DrugModel::poisson(MeanFunction::michaelis_menten(0.5, 2.0), {0, 50});
    const ControlModel pc = ControlModel::poisson(0.3);
    const TargetDoseGradient g = target_dose_grad(pd, pc);
    const AcSolution ac = ac_optimal_detailed(pd, pc);
    const InducedDesign ind = induced(ac.design);
    const oracle::Curve cur{false, 0, 0.5, 2.0};
    oracle::Mat m1 = oracle::Mat::Zero(2, 2);
    for (std::size_t i = 0; i < ind.doses.size(); ++i)
      m1 += ind.weights[i] * oracle::drug_info(oracle::Fam::Poisson, cur, ind.doses[i]);
    const double delta = (g.drug.transpose() * oracle::pinv(m1) * g.drug)(0, 0);
    const double v2 = g.control(0) * g.control(0) * 0.3;
    const double rho = rho_p(ind, pd, pc, KMatrix::block(g.drug, g.control), -1.0);
    CHECK(rho == Approx(std::sqrt(delta / v2)).epsilon(1e-9));
    CHECK(ac.design.control_weight() == Approx(1.0 / (1.0 + rho)).epsilon(1e-9));
  }
}

TEST_CASE("AC criterion") {
  const DrugModel drug = DrugModel::negbinomial(gout_curve, {0, 300}, 10);
  const ControlModel control = ControlModel::negbinomial(0.9206, 10);
  const Design opt = ac_optimal(drug, control);
  const double psi_opt = psi_ac(opt, drug, control);
  CHECK(psi_ac_scalar_control(opt, drug, control) == Approx(psi_opt).epsilon(1e-10));

  // Shifting mass to the control arm blows the drug term up like 1/(1 - w).
  const InducedDesign ind = induced(opt);
  double last = 0;
  for (double wc : {0.6, 0.9, 0.99, 0.999}) {
    const double v = psi_ac(with_control(ind, wc), drug, control);
    CHECK(v > last);
    last = v;
  }
  CHECK(last > 100 * psi_opt);
  CHECK_THROWS_AS(psi_ac(Design({DesignPoint::drug(100)}, {1.0}), drug, control), NotEstimable);

  // psi and phi_{-1} with the stacked contrast order designs identically.
  const Matrix kac = ac_contrast(drug, control);
  const KMatrix k = KMatrix::general(kac);
  for (double wc : {0.3, 0.5, 0.7}) {
    const Design a = with_control(ind, wc), b = with_control(ind, wc + 0.05);
    const bool by_psi = psi_ac(a, drug, control) < psi_ac(b, drug, control);
    const bool by_phi = phi_p(a, drug, control, k, -1.0) > phi_p(b, drug, control, k, -1.0);
    CHECK(by_psi == by_phi);
  }
  CHECK(ac_efficiency(opt, opt, drug, control) == Approx(1.0));
}

TEST_CASE("full criterion increases with the reduced one at a fixed control weight") {
  const DrugModel drug = DrugModel::poisson(gout_curve, {0, 300});
  const ControlModel control = ControlModel::poisson(0.9);
  const KMatrix k = KMatrix::identity(3, 1);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double p : {0.0, -1.0, -2.0}) {
    std::vector<std::pair<double, double>> vals;
    for (int i = 0; i < 12; ++i) {
      const InducedDesign ind{{0.0, 1 + 60 * u(rng), 100 + 200 * u(rng)}, {0, 0, 0}};
      InducedDesign w = ind;
      double s = 0;
      for (double& x : w.weights) s += (x = 0.1 + u(rng));
      for (double& x : w.weights) x /= s;
      vals.emplace_back(phi_p_reduced(w, drug, k.k11(), p), phi_p(with_control(w, 0.3), drug, control, k, p));
    }
    std::sort(vals.begin(), vals.end());
    for (std::size_t i = 1; i < vals.size(); ++i) CHECK(vals[i].second >= vals[i - 1].second * (1 - 1e-12));
  }
}

TEST_CASE("efficiencies") {
  const DrugModel drug = DrugModel::normal(gout_curve, {0, 300}, 0.0025);
  const ControlModel control = ControlModel::normal(0.9206, 0.0025);
  const Design opt = d_opt_emax(drug, control);
  const KMatrix k = KMatrix::identity(4, 2);
  CHECK(d_efficiency(opt, opt, drug, control, k) == Approx(1.0));
  const Design flat = Design::normalized(
      {DesignPoint::drug(0), DesignPoint::drug(100), DesignPoint::drug(200), DesignPoint::drug(300), DesignPoint::control()},
      {1, 1, 1, 1, 1});
  const double e = d_efficiency(flat, opt, drug, control, k);
  CHECK(e > 0.0);
  CHECK(e < 1.0);
  // A reference that is beaten is reported instead of clamped.
  CHECK_THROWS_AS(d_efficiency(opt, flat, drug, control, k), Error);
}

TEST_CASE("K matrix") {
  const KMatrix id = KMatrix::identity(3, 1);
  CHECK(id.is_block());
  CHECK(id.t() == 4);
  CHECK(id.t1() == 3);
  CHECK_THROWS_AS(KMatrix::general(Matrix::Zero(3, 1)), ValidationError);
  const KMatrix g = KMatrix::general(Matrix::Identity(3, 2));
  CHECK_FALSE(g.is_block());
  CHECK_THROWS_AS(g.k11(), Unsupported);
}
