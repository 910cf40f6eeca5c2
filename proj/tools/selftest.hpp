#pragma once

#include <iosfwd>

// Quick oracle and finite-difference property checks. Prints one line per
// suite and returns true when all pass.
bool run_selftest(std::ostream& out);
