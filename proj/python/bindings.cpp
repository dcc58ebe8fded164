#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "acdesign/equivalence.hpp"
#include "acdesign/errors.hpp"
#include "acdesign/scenario.hpp"
#include "acdesign/solvers.hpp"

namespace py = pybind11;
using namespace acdesign;

namespace {

// Python side sees designs as lists of (dose, weight) with dose "C" for the control arm.
using Row = std::pair<std::variant<double, std::string>, double>;

std::vector<Row> to_rows(const Design& d) {
  std::vector<Row> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& p = d.points()[i];
    if (p.arm == Arm::Control) {
      out.emplace_back(std::string("C"), d.weights()[i]);
    } else {
      out.emplace_back(p.dose, d.weights()[i]);
    }
  }
  return out;
}

Design from_rows(const std::vector<Row>& rows) {
  std::vector<DesignPoint> pts;
  std::vector<double> w;
  for (const auto& [dose, weight] : rows) {
    if (const auto* s = std::get_if<std::string>(&dose)) {
      if (*s != "C") throw ValidationError("control rows use dose \"C\", got \"" + *s + "\"");
      pts.push_back(DesignPoint::control());
    } else {
      pts.push_back(DesignPoint::drug(std::get<double>(dose)));
    }
    w.push_back(weight);
  }
  return Design::normalized(pts, w);
}

MeanFunction make_mean(const std::string& kind, const std::vector<double>& theta) {
  if (kind == "emax") {
    if (theta.size() != 3) throw ValidationError("emax needs theta = (e0, emax, ed50)");
    return MeanFunction::emax(theta[0], theta[1], theta[2]);
  }
  if (kind == "michaelis-menten" || kind == "mm") {
    if (theta.size() != 2) throw ValidationError("michaelis-menten needs theta = (emax, ed50)");
    return MeanFunction::michaelis_menten(theta[0], theta[1]);
  }
  throw ValidationError("unknown mean function '" + kind + "'");
}

DrugModel make_drug(const std::string& family, const std::string& mean, const std::vector<double>& theta,
                    std::pair<double, double> range, double sigma2, int r) {
  const MeanFunction m = make_mean(mean, theta);
  const DoseRange dr{range.first, range.second};
  switch (family_from_string(family)) {
    case Family::Normal: return DrugModel::normal(m, dr, sigma2);
    case Family::NegBinomial: return DrugModel::negbinomial(m, dr, r);
    case Family::Binomial: return DrugModel::binomial(m, dr);
    case Family::Poisson: return DrugModel::poisson(m, dr);
  }
  throw ValidationError("unknown family");
}

ControlModel make_control(const std::string& family, double mu, double sigma2, int r) {
  switch (family_from_string(family)) {
    case Family::Normal: return ControlModel::normal(mu, sigma2);
    case Family::NegBinomial: return ControlModel::negbinomial(mu, r);
    case Family::Binomial: return ControlModel::binomial(mu);
    case Family::Poisson: return ControlModel::poisson(mu);
  }
  throw ValidationError("unknown family");
}

CriterionSpec make_spec(const DrugModel& drug, const ControlModel& control, const std::string& kind, double p,
                        const std::optional<Matrix>& k) {
  if (kind == "AC") return CriterionSpec::ac();
  if (kind == "D") return CriterionSpec::phi(0.0, KMatrix::identity(drug.parameter_count(), control.parameter_count()));
  if (kind == "phi") {
    return CriterionSpec::phi(
        p, k ? KMatrix::general(*k) : KMatrix::identity(drug.parameter_count(), control.parameter_count()));
  }
  throw ValidationError("criterion kind must be D, phi or AC");
}

py::dict report_dict(const SensitivityReport& r) {
  py::dict d;
  d["verdict"] = std::string(to_string(r.verdict));
  d["max_violation"] = r.max_violation;
  d["argmax_dose"] = r.argmax_dose;
  d["grid_doses"] = r.grid_doses;
  d["values"] = r.values;
  d["control_value"] = r.control_value;
  d["support_residuals"] = r.support_residuals;
  return d;
}

}  // namespace

PYBIND11_MODULE(_acdesign, m) {
  m.doc() = "Locally optimal designs for active-controlled dose-finding studies";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NotEstimable>(m, "NotEstimable", PyExc_ArithmeticError);
  py::register_exception<NoTargetDose>(m, "NoTargetDose", PyExc_ValueError);
  py::register_exception<InfeasibleGeometry>(m, "InfeasibleGeometry", PyExc_RuntimeError);
  py::register_exception<Unsupported>(m, "Unsupported", PyExc_NotImplementedError);

  py::class_<DrugModel>(m, "DrugModel")
      .def(py::init(&make_drug), py::arg("family"), py::arg("mean"), py::arg("theta"), py::arg("dose_range"),
           py::arg("sigma2") = 1.0, py::arg("r") = 1)
      .def_property_readonly("family", [](const DrugModel& d) { return std::string(to_string(d.family())); })
      .def_property_readonly("parameter_count", &DrugModel::parameter_count)
      .def("mean", [](const DrugModel& d, double x) { return mean(d, x); })
      .def("mean_gradient", [](const DrugModel& d, double x) { return mean_grad(d, x); })
      .def("fisher", [](const DrugModel& d, double x) { return fisher_drug(d, x); });

  py::class_<ControlModel>(m, "ControlModel")
      .def(py::init(&make_control), py::arg("family"), py::arg("mu"), py::arg("sigma2") = 1.0, py::arg("r") = 1)
      .def_property_readonly("family", [](const ControlModel& c) { return std::string(to_string(c.family())); })
      .def("fisher", [](const ControlModel& c) { return fisher_control(c); });

  m.def("target_dose", &target_dose, py::arg("drug"), py::arg("control"));

  m.def(
      "d_optimal",
      [](const DrugModel& drug, const ControlModel& control) {
        if (auto d = d_optimal_closed_form(drug, control)) return to_rows(*d);
        return to_rows(
            numeric_solve(drug, control,
                          CriterionSpec::phi(0.0, KMatrix::identity(drug.parameter_count(), control.parameter_count())))
                .design);
      },
      py::arg("drug"), py::arg("control"));

  m.def(
      "ac_optimal", [](const DrugModel& drug, const ControlModel& control) { return to_rows(ac_optimal(drug, control)); },
      py::arg("drug"), py::arg("control"));

  m.def(
      "solve",
      [](const DrugModel& drug, const ControlModel& control, const std::string& kind, double p,
         const std::optional<Matrix>& k, int grid_size, std::uint64_t seed) {
        SolveOptions opts;
        opts.grid_size = grid_size;
        opts.seed = seed;
        opts.validate();
        const NumericResult r = numeric_solve(drug, control, make_spec(drug, control, kind, p, k), opts);
        py::dict out;
        out["design"] = to_rows(r.design);
        out["criterion"] = r.criterion;
        out["max_violation"] = r.max_violation;
        out["converged"] = r.converged;
        return out;
      },
      py::arg("drug"), py::arg("control"), py::arg("kind") = "D", py::arg("p") = 0.0, py::arg("K") = py::none(),
      py::arg("grid_size") = 257, py::arg("seed") = 1);

  m.def(
      "verify",
      [](const std::vector<Row>& design, const DrugModel& drug, const ControlModel& control, const std::string& kind,
         double p, const std::optional<Matrix>& k, int grid_size, double tol) {
        return report_dict(verify(from_rows(design), drug, control, make_spec(drug, control, kind, p, k),
                                  VerifyOptions{grid_size, tol}));
      },
      py::arg("design"), py::arg("drug"), py::arg("control"), py::arg("kind") = "D", py::arg("p") = 0.0,
      py::arg("K") = py::none(), py::arg("grid_size") = 512, py::arg("tol") = 1e-5);

  m.def(
      "psi_ac",
      [](const std::vector<Row>& design, const DrugModel& drug, const ControlModel& control) {
        return psi_ac(from_rows(design), drug, control);
      },
      py::arg("design"), py::arg("drug"), py::arg("control"));

  m.def(
      "d_efficiency",
      [](const std::vector<Row>& design, const DrugModel& drug, const ControlModel& control) {
        return d_efficiency(from_rows(design), drug, control);
      },
      py::arg("design"), py::arg("drug"), py::arg("control"));

  m.def(
      "ac_efficiency",
      [](const std::vector<Row>& design, const DrugModel& drug, const ControlModel& control) {
        return ac_efficiency(from_rows(design), drug, control);
      },
      py::arg("design"), py::arg("drug"), py::arg("control"));

  m.def("round_design", [](const std::vector<double>& w, int n) { return round_design(w, n); }, py::arg("weights"),
        py::arg("n"));
}
