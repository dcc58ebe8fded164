#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "acdesign/cli.hpp"
#include "acdesign/errors.hpp"
#include "acdesign/scenario.hpp"

using namespace acdesign;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("acdesign_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = path / name;
    std::ofstream(p) << text;
    return p;
  }
};

const char* kGoutNb =
    "drug.family = negbinomial\n"
    "drug.mean = emax\n"
    "drug.theta = 0.26, 0.73, 10.5\n"
    "drug.dose_range = 0, 300\n"
    "drug.r = 10\n"
    "control.mu = 0.9206\n"
    "control.r = 10\n"
    "criterion.kind = D\n";

std::string parse_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_scenario(in, "s.txt");
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("scenario parsing") {
  std::istringstream in(std::string(kGoutNb) + "# comment\n\nsolver.seed = 9\nverify.tol = 1e-6\n");
  const Scenario sc = parse_scenario(in);
  CHECK(sc.drug.family() == Family::NegBinomial);
  CHECK(sc.drug.mean().ed50() == 10.5);
  CHECK(sc.control.family() == Family::NegBinomial);
  CHECK(sc.d_criterion);
  CHECK(sc.solver.seed == 9);
  CHECK(sc.verify.tol == 1e-6);

  const std::string unknown = parse_error(std::string(kGoutNb) + "drug.colour = red\n");
  CHECK(unknown.find("s.txt:9") != std::string::npos);
  CHECK(unknown.find("drug.colour") != std::string::npos);

  const std::string bad = parse_error(std::string(kGoutNb) + "solver.grid_size = many\n");
  CHECK(bad.find("s.txt:9") != std::string::npos);
  CHECK(bad.find("solver.grid_size") != std::string::npos);

  CHECK_FALSE(parse_error(std::string(kGoutNb) + "drug.r = 3\n").empty());
  CHECK_FALSE(parse_error(std::string(kGoutNb) + "control.sigma2 = 1\n").empty());
  CHECK_FALSE(parse_error("drug.family = poisson\n").empty());

  std::istringstream ac(
      "drug.family = binomial\ndrug.mean = mm\ndrug.theta = 0.5, 2\ndrug.dose_range = 0, 50\n"
      "control.mu = 0.4\ncriterion.kind = phi\ncriterion.p = -inf\ncriterion.K = 1, 0; 0, 1; 0, 1\n");
  const Scenario g = parse_scenario(ac);
  CHECK(g.criterion.p == kMinusInfinity);
  CHECK_FALSE(g.criterion.k->is_block());
}

TEST_CASE("design files") {
  const Design d = parse_design_inline("25:0.143, 50:0.143, 100:0.143, 200:0.143, 300:0.143, C:0.285");
  CHECK(d.size() == 6);
  CHECK(d.control_weight() == Approx(0.285 / 1.0));
  CHECK_THROWS_AS(parse_design_inline("25:0.143, C:0.285"), ValidationError);

  std::ostringstream out;
  const Design exact({DesignPoint::drug(1.0 / 3.0), DesignPoint::control()}, {2.0 / 3.0, 1.0 / 3.0});
  write_design_csv(out, exact);
  std::istringstream back(out.str());
  const Design again = parse_design_csv(back);
  CHECK(again.points()[0].dose == exact.points()[0].dose);
  CHECK(again.weights() == exact.weights());

  std::istringstream empty("");
  CHECK_THROWS_AS(parse_design_csv(empty), ValidationError);
  std::istringstream header_only("dose,arm,weight\n");
  CHECK_THROWS_AS(parse_design_csv(header_only), ValidationError);

  CHECK(format_real(9.813084112) == "9.81308");
  CHECK(round6(0.2222222222) == 0.222222);
}

TEST_CASE("solve, verify and efficiency commands") {
  TempDir tmp;
  const fs::path sc = tmp.write("gout.txt", std::string(kGoutNb) +
                                                "output.design = out/design.csv\noutput.report = out/report.json\n");
  std::ostringstream out, err;
  REQUIRE(cli::cmd_solve(sc, {}, out, err) == cli::kOk);
  CHECK(out.str().find("closed-form/d-optimal-emax") != std::string::npos);

  std::ifstream report_file(tmp.path / "out/report.json");
  const auto report = nlohmann::json::parse(report_file);
  CHECK(report["method"] == "closed-form/d-optimal-emax");
  CHECK(report["verify"]["verdict"] == "optimal");
  const auto& rows = report["design"];
  REQUIRE(rows.size() == 4);
  CHECK(rows[0]["dose"].get<double>() == 0.0);
  CHECK(rows[1]["dose"].get<double>() == Approx(8.17831));
  CHECK(rows[2]["dose"].get<double>() == 300.0);
  CHECK(rows[3]["dose"] == "C");
  for (const auto& r : rows) CHECK(r["weight"].get<double>() == Approx(0.25));

  std::ostringstream vout, verr;
  CHECK(cli::cmd_verify(sc, tmp.path / "out/design.csv", {}, vout, verr) == cli::kOk);
  CHECK(vout.str().find("verdict: optimal") != std::string::npos);

  const fs::path standard = tmp.write("standard.csv",
                                      "dose,arm,weight\n25,drug,0.143\n50,drug,0.143\n100,drug,0.143\n"
                                      "200,drug,0.143\n300,drug,0.143\nC,control,0.285\n");
  std::ostringstream sout, serr;
  CHECK(cli::cmd_verify(sc, standard, {}, sout, serr) == cli::kOk);
  CHECK(sout.str().find("verdict: not-optimal") != std::string::npos);

  std::ostringstream eout, eerr;
  cli::Overrides ov;
  ov.json = true;
  CHECK(cli::cmd_efficiency(sc, standard, ov, eout, eerr) == cli::kOk);
  const auto eff = nlohmann::json::parse(eout.str());
  CHECK(eff["d_efficiency"].get<double>() == Approx(0.106).epsilon(0.01));

  const fs::path empty = tmp.write("empty.csv", "");
  std::ostringstream xout, xerr;
  CHECK(cli::cmd_verify(sc, empty, {}, xout, xerr) == cli::kValidation);
  CHECK(xerr.str().find("error") != std::string::npos);
}

TEST_CASE("invalid scenarios exit with the validation code") {
  TempDir tmp;
  const fs::path sc = tmp.write("bad.txt",
                                "drug.family = binomial\ndrug.mean = mm\ndrug.theta = 1.2, 2\n"
                                "drug.dose_range = 0, 50\ncontrol.mu = 0.4\n");
  std::ostringstream out, err;
  CHECK(cli::cmd_solve(sc, {}, out, err) == cli::kValidation);
  CHECK(err.str().find("bad.txt:4: drug.dose_range") != std::string::npos);
  std::ostringstream o2, e2;
  CHECK(cli::cmd_solve(tmp.path / "missing.txt", {}, o2, e2) != cli::kOk);
}

TEST_CASE("general K scenario round trip") {
  TempDir tmp;
  const fs::path sc = tmp.write("k.txt",
                                "drug.family = binomial\ndrug.mean = mm\ndrug.theta = 0.5, 2\n"
                                "drug.dose_range = 0, 50\ncontrol.mu = 0.4\ncriterion.kind = phi\ncriterion.p = 0\n"
                                "criterion.K = 1, 0; 0.2, 0; 0, 1\noutput.design = d.csv\n");
  std::ostringstream out, err;
  REQUIRE(cli::cmd_solve(sc, {}, out, err) == cli::kOk);
  CHECK(out.str().find("numeric/vertex-exchange") != std::string::npos);
  std::ostringstream vout, verr;
  CHECK(cli::cmd_verify(sc, tmp.path / "d.csv", {}, vout, verr) == cli::kOk);
  CHECK(vout.str().find("verdict: optimal") != std::string::npos);
}

TEST_CASE("reproduce is byte-stable") {
  std::ostringstream a, b, ea, eb;
  const int ra = cli::cmd_reproduce(std::nullopt, {}, a, ea);
  const int rb = cli::cmd_reproduce(std::nullopt, {}, b, eb);
  CHECK(ra == rb);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("# d_optimal table\ncell,expected,actual,tolerance,status\n") == 0);
  CHECK(a.str().find("# ac_optimal table") != std::string::npos);
}
