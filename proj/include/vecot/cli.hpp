#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vecot::io {

/// Run the `vecot` command line. args[0] is the program name. Result JSON
/// goes to --output or `out`; summaries and errors go to `err`. Returns the
/// process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vecot::io
