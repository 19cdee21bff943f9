#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mcghd/model.hpp"

namespace mcghd::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitDegenerate = 3,
  kExitNumeric = 4,
};

/// Runs the command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "3" -> {3}; "1..4" -> {1, 2, 3, 4}; "1,3" -> {1, 3}.
std::vector<int> parse_component_range(const std::string& spec);

/// "mcghd", "mghd,mmsghd" or "all".
std::vector<Family> parse_family_list(const std::string& spec);

}  // namespace mcghd::cli
