#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctrepro {

// Command-line entry point: schedule | simulate | analyze | fit | curves.
// Returns 0 on success, 1 on a runtime error (one-line diagnostic on err),
// 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Same, with args excluding the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctrepro
