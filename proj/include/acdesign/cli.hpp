#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace acdesign::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kValidation = 2, kNotConverged = 3 };

/// Command-line overrides of the scenario settings.
struct Overrides {
  std::optional<int> grid;              // solver grid size
  std::optional<double> tol;            // verification tolerance
  std::optional<std::uint64_t> seed;    // multistart seed
  bool json = false;                    // print the JSON report instead of text
};

int cmd_solve(const std::filesystem::path& scenario, const Overrides& ov, std::ostream& out, std::ostream& err);
int cmd_verify(const std::filesystem::path& scenario, const std::filesystem::path& design, const Overrides& ov,
               std::ostream& out, std::ostream& err);
int cmd_efficiency(const std::filesystem::path& scenario, const std::filesystem::path& design,
                   const Overrides& ov, std::ostream& out, std::ostream& err);
int cmd_reproduce(const std::optional<std::filesystem::path>& out_dir, const Overrides& ov, std::ostream& out,
                  std::ostream& err);

/// One checked cell of the reproduced design tables.
struct Cell {
  std::string table;
  std::string name;
  double expected = 0.0;
  double actual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Recomputes the two reference design tables for the gout and migraine studies.
std::vector<Cell> reproduce_tables(std::uint64_t seed = 1);

}  // namespace acdesign::cli
