// Command-line driver: simulate, equilibria, infinity, graph, ymap, sweep.
#pragma once

#include <iosfwd>

namespace sturm {

/// Exit status: 0 success, 2 configuration or usage error, 3 numerical-fidelity
/// error, 1 any other failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sturm
