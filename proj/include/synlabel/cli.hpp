#pragma once

#include <ostream>

namespace synlabel {

// Command-line front end. Subcommands: run, sweep-entropy, sweep-noise,
// matched-tvd, validate, info.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 data error
// (missing or malformed input, failed validation).
int CliEntry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace synlabel
