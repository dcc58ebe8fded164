#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>

#include "acdesign/design.hpp"
#include "acdesign/errors.hpp"
#include "oracles.hpp"

using namespace acdesign;
using doctest::Approx;

namespace {

const MeanFunction mm = MeanFunction::michaelis_menten(0.5, 2.0);

Design drug_design(std::vector<double> doses, std::vector<double> w, std::optional<double> control = {}) {
  std::vector<DesignPoint> pts;
  for (double d : doses) pts.push_back(DesignPoint::drug(d));
  if (control) {
    pts.push_back(DesignPoint::control());
    w.push_back(*control);
  }
  return Design(pts, w);
}

}  // namespace

TEST_CASE("design validation") {
  CHECK_THROWS_AS(drug_design({1, 2}, {0.5, 0.4}), ValidationError);
  CHECK_THROWS_AS(drug_design({1, 2}, {1.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(drug_design({1, 1}, {0.5, 0.5}), ValidationError);
  CHECK_THROWS_AS(Design({DesignPoint::control(), DesignPoint::control()}, {0.5, 0.5}), ValidationError);
  const Design n = Design::normalized({DesignPoint::drug(1), DesignPoint::control()}, {3, 1});
  CHECK(n.weights()[0] == Approx(0.75));
  CHECK(n.control_weight() == Approx(0.25));
}

TEST_CASE("induced design") {
  const InducedDesign a = induced(drug_design({1, 2}, {0.3, 0.3}, 0.4));
  CHECK(a.weights[0] == Approx(0.5));
  CHECK(a.weights[1] == Approx(0.5));
  const InducedDesign b = induced(drug_design({7}, {1.0}));
  CHECK(b.doses == std::vector<double>{7});
  CHECK(b.weights[0] == 1.0);
  const InducedDesign c = induced(drug_design({1, 2, 3}, {0.25, 0.25, 0.25}, 0.25));
  for (double w : c.weights) CHECK(w == Approx(1.0 / 3));
  CHECK_THROWS(induced(Design({DesignPoint::control()}, {1.0})));

  const Design back = with_control(a, 0.4);
  CHECK(back.control_weight() == Approx(0.4));
  CHECK(back.weights()[0] == Approx(0.3));
}

TEST_CASE("information matrix") {
  const DrugModel drug = DrugModel::poisson(mm, {0, 50});
  const ControlModel control = ControlModel::poisson(0.25);

  SUBCASE("no control point leaves the control block empty") {
    const InfoMatrix m = info_matrix(drug_design({0.9434, 50}, {0.5, 0.5}), drug, control);
    CHECK(m.matrix.rows() == 3);
    CHECK(m.matrix(2, 2) == 0.0);
    CHECK(m.matrix.block(0, 2, 2, 1).norm() == 0.0);
    const Matrix want = 0.5 * (fisher_drug(drug, 0.9434) + fisher_drug(drug, 50));
    CHECK((m.matrix.topLeftCorner(2, 2) - want).norm() < 1e-15);
    CHECK(m.rank == 2);
  }
  SUBCASE("blocks scale with the arm masses") {
    const DrugModel nd = DrugModel::normal(mm, {0, 50}, 1.0);
    const ControlModel nc = ControlModel::normal(0.25, 1.0);
    const InfoMatrix m = info_matrix(drug_design({1.852, 50}, {0.3, 0.3}, 0.4), nd, nc);
    const Matrix drug_part = drug_information(InducedDesign{{1.852, 50}, {0.5, 0.5}}, nd);
    CHECK((m.matrix.topLeftCorner(3, 3) - 0.6 * drug_part).norm() < 1e-14);
    CHECK((m.matrix.bottomRightCorner(2, 2) - 0.4 * fisher_control(nc)).norm() < 1e-14);
  }
}

TEST_CASE("pseudo inverse") {
  CHECK((pseudo_inverse(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm() < 1e-15);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  const Matrix pd = pseudo_inverse(d);
  CHECK(pd(0, 0) == Approx(0.5));
  CHECK(pd(1, 1) == 0.0);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int i = 0; i < 10; ++i) {
    Matrix b(3, 2);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 2; ++c) b(r, c) = n01(rng);
    const Matrix a = b * b.transpose();
    const Matrix ap = pseudo_inverse(a);
    CHECK((a * ap * a - a).norm() < 1e-10 * a.norm());
    CHECK((ap * a * ap - ap).norm() < 1e-10 * ap.norm());
    CHECK((ap - oracle::pinv(a)).norm() < 1e-9 * ap.norm());
    CHECK(make_info(a).rank == 2);
  }
}

TEST_CASE("estimability") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 3;
  const InfoMatrix info = make_info(m);
  CHECK(estimable(Vector::Unit(2, 0), info));
  CHECK_FALSE(estimable(Vector::Unit(2, 1), info));

  const DrugModel drug = DrugModel::normal(mm, {0, 50}, 1.0);
  const Matrix one = fisher_drug(drug, 5.0).topLeftCorner(2, 2);
  const InfoMatrix m1 = make_info(one);
  const Vector f = mm.gradient(5.0);
  CHECK(estimable(3.0 * f, m1));
  const Vector orth = Vector{{-f(1), f(0)}};
  CHECK_FALSE(estimable(orth, m1));
}

TEST_CASE("rounding to exact sample sizes") {
  CHECK(round_design(std::vector<double>{2. / 9, 2. / 9, 2. / 9, 1. / 3}, 36) == std::vector<int>{8, 8, 8, 12});
  CHECK(round_design(std::vector<double>{0.5, 0.5}, 2) == std::vector<int>{1, 1});
  CHECK_THROWS_AS(round_design(std::vector<double>{0.5, 0.5}, 1), DomainError);

  // Brute force: the apportionment maximises min_i n_i / w_i over all allocations summing to N.
  const std::vector<std::vector<double>> cases = {{1. / 3, 1. / 3, 1. / 3}, {0.1, 0.2, 0.7}, {0.45, 0.3, 0.25}};
  for (const auto& w : cases) {
    for (int n : {3, 10, 17, 100}) {
      const std::vector<int> got = round_design(w, n);
      CHECK(std::accumulate(got.begin(), got.end(), 0) == n);
      auto score = [&](const std::vector<int>& a) {
        double s = 1e300;
        for (std::size_t i = 0; i < a.size(); ++i) s = std::min(s, a[i] / w[i]);
        return s;
      };
      double best = 0;
      for (int a = 1; a <= n; ++a)
        for (int b = 1; a + b < n; ++b) best = std::max(best, score({a, b, n - a - b}));
      CHECK(score(got) == Approx(best));
      for (int x : got) CHECK(x >= 1);
    }
  }
  CHECK(round_design(std::vector<double>{1. / 3, 1. / 3, 1. / 3}, 100) == std::vector<int>{34, 33, 33});
}

TEST_CASE("merging close doses") {
  const Design d = drug_design({1.0, 1.0005, 20.0}, {0.2, 0.2, 0.3}, 0.3);
  const Design m = merge_close(d, 1e-2);
  CHECK(m.drug_point_count() == 2);
  CHECK(m.points()[0].dose == Approx(1.00025));
  CHECK(m.weights()[0] == Approx(0.4));
  CHECK(m.control_weight() == Approx(0.3));
}
