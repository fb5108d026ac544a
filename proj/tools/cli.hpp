#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fabppi::cli {

// Exit codes: 0 success, 2 bad configuration or input, 3 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fabppi::cli
