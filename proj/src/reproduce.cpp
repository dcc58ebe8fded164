// Published D- and AC-optimal designs for the gout and migraine studies, recomputed and checked cell by cell.

#include <algorithm>
#include <cmath>
#include <limits>

#include "acdesign/cli.hpp"
#include "acdesign/errors.hpp"
#include "acdesign/solvers.hpp"

namespace acdesign::cli {

namespace {

struct Study {
  std::string name;
  MeanFunction mean;
  DoseRange range;
  double mu;
  Design standard;
};

Study gout() {
  std::vector<DesignPoint> pts;
  std::vector<double> w;
  for (double d : {25.0, 50.0, 100.0, 200.0, 300.0}) {
    pts.push_back(DesignPoint::drug(d));
    w.push_back(0.143);
  }
  pts.push_back(DesignPoint::control());
  w.push_back(0.285);
  return {"gout", MeanFunction::emax(0.26, 0.73, 10.5), {0.0, 300.0}, 0.9206, Design::normalized(pts, w)};
}

Study migraine() {
  std::vector<DesignPoint> pts;
  const std::vector<double> doses = {0.0, 2.5, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0};
  std::vector<double> w = {0.21, 0.05, 0.07, 0.10, 0.10, 0.11, 0.10, 0.10};
  for (double d : doses) pts.push_back(DesignPoint::drug(d));
  pts.push_back(DesignPoint::control());
  w.push_back(0.16);
  return {"migraine", MeanFunction::emax(0.098, 0.2052, 12.3), {0.0, 200.0}, 0.2505, Design::normalized(pts, w)};
}

constexpr double kSigma2 = 0.0025;
constexpr int kR = 10;

class Table {
 public:
  Table(std::string table, std::vector<Cell>& out) : table_(std::move(table)), out_(out) {}

  void check(const std::string& name, double expected, double actual, double tol) {
    out_.push_back(Cell{table_, name, expected, actual, tol, std::abs(actual - expected) <= tol});
  }

  // Expected support {(dose, weight)}; each expected dose is matched to the nearest drug point.
  void design(const std::string& row, const Design& d, const std::vector<std::pair<double, double>>& drug,
              double control_weight, double dose_tol, double weight_tol, bool check_doses = true) {
    const InducedDesign ind = induced(d);
    check(row + " drug points", static_cast<double>(drug.size()), static_cast<double>(ind.doses.size()), 0.0);
    double wc = 0.0;
    for (std::size_t i = 0; i < d.points().size(); ++i) {
      if (d.points()[i].arm == Arm::Control) wc = d.weights()[i];
    }
    for (std::size_t i = 0; i < drug.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < ind.doses.size(); ++j) {
        if (std::abs(ind.doses[j] - drug[i].first) < std::abs(ind.doses[best] - drug[i].first)) best = j;
      }
      const std::string tag = row + " point " + std::to_string(i + 1);
      if (check_doses) check(tag + " dose", drug[i].first, ind.doses[best], dose_tol);
      check(tag + " weight", drug[i].second, ind.weights[best] * (1.0 - wc), weight_tol);
    }
    check(row + " control weight", control_weight, wc, weight_tol);
  }

 private:
  std::string table_;
  std::vector<Cell>& out_;
};

}  // namespace

std::vector<Cell> reproduce_tables(std::uint64_t seed) {
  std::vector<Cell> cells;
  SolveOptions opts;
  opts.seed = seed;
  const Study g = gout();
  const Study m = migraine();

  const DrugModel gn = DrugModel::normal(g.mean, g.range, kSigma2);
  const ControlModel gcn = ControlModel::normal(g.mu, kSigma2);
  const DrugModel gnb = DrugModel::negbinomial(g.mean, g.range, kR);
  const ControlModel gcnb = ControlModel::negbinomial(g.mu, kR);
  const DrugModel mn = DrugModel::normal(m.mean, m.range, kSigma2);
  const ControlModel mcn = ControlModel::normal(m.mu, kSigma2);
  const DrugModel mb = DrugModel::binomial(m.mean, m.range);
  const ControlModel mcb = ControlModel::binomial(m.mu);

  Table d("d_optimal", cells);
  const double two9 = 2.0 / 9.0;
  const Design dgn = d_opt_emax(gn, gcn);
  const Design dgnb = d_opt_emax(gnb, gcnb);
  const Design dmn = d_opt_emax(mn, mcn);
  const Design dmb = d_opt_emax(mb, mcb);
  d.design("gout normal", dgn, {{0.0, two9}, {9.81, two9}, {300.0, two9}}, 1.0 / 3.0, 0.05, 0.002);
  d.design("gout negbinomial", dgnb, {{0.0, 0.25}, {8.23, 0.25}, {300.0, 0.25}}, 0.25, 0.05, 0.002);
  d.design("migraine normal", dmn, {{0.0, two9}, {10.95, two9}, {200.0, two9}}, 1.0 / 3.0, 0.05, 0.002);
  d.design("migraine binomial", dmb, {{0.0, 0.25}, {9.05, 0.25}, {200.0, 0.25}}, 0.25, 0.05, 0.002);
  const KMatrix kn = KMatrix::identity(4, 2);
  const KMatrix k1 = KMatrix::identity(3, 1);
  d.check("gout normal standard efficiency", 0.25, d_efficiency(g.standard, dgn, gn, gcn, kn), 0.01);
  d.check("gout negbinomial standard efficiency", 0.11, d_efficiency(g.standard, dgnb, gnb, gcnb, k1), 0.01);
  d.check("migraine normal standard efficiency", 0.84, d_efficiency(m.standard, dmn, mn, mcn, kn), 0.01);
  d.check("migraine binomial standard efficiency", 0.86, d_efficiency(m.standard, dmb, mb, mcb, k1), 0.01);
  d.check("gout normal design under negbinomial", 0.98, d_efficiency(dgn, dgnb, gnb, gcnb, k1), 0.01);
  d.check("migraine normal design under binomial", 0.98, d_efficiency(dmn, dmb, mb, mcb, k1), 0.01);

  Table a("ac_optimal", cells);
  const Design agn = ac_optimal(gn, gcn, opts);
  const Design agnb = ac_optimal(gnb, gcnb, opts);
  const Design amn = ac_optimal(mn, mcn, opts);
  const Design amb = ac_optimal(mb, mcb, opts);
  a.design("gout normal", agn, {{101.06, 0.5}}, 0.5, 1.5, 0.001);
  {
    // The reference dose must not beat ours; a non-estimable design there counts as infinite variance.
    double psi_reference = std::numeric_limits<double>::infinity();
    try {
      psi_reference = psi_ac(Design({DesignPoint::drug(101.06), DesignPoint::control()}, {0.5, 0.5}), gn, gcn);
    } catch (const NotEstimable&) {
    }
    const double ours = psi_ac(agn, gn, gcn);
    a.check("gout normal psi not above reference dose", 0.0, ours <= psi_reference + 1e-8 ? 0.0 : 1.0, 0.0);
  }
  a.design("gout negbinomial", agnb, {{5.44, 0.076}, {300.0, 0.356}}, 0.568, 0.05, 0.005);
  {
    const InducedDesign ind = induced(amn);
    a.check("migraine normal drug points", 1.0, static_cast<double>(ind.doses.size()), 0.0);
    a.check("migraine normal point 1 dose", 35.739, ind.doses.front(), 0.2);
  }
  a.design("migraine binomial", amb, {{0.0, 0.0734}, {200.0, 0.4195}}, 0.5071, 0.05, 0.005, false);
  a.check("gout normal standard efficiency", 0.66, ac_efficiency(g.standard, agn, gn, gcn), 0.01);
  a.check("gout negbinomial standard efficiency", 0.48, ac_efficiency(g.standard, agnb, gnb, gcnb), 0.01);
  a.check("migraine normal standard efficiency", 0.48, ac_efficiency(m.standard, amn, mn, mcn), 0.01);
  a.check("migraine binomial standard efficiency", 0.47, ac_efficiency(m.standard, amb, mb, mcb), 0.01);
  return cells;
}

}  // namespace acdesign::cli
