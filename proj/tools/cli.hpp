// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Command-line surface. run() is the whole program (main() is a one-liner),
// exposed as a library call so tests can drive subcommands in-process.
// Exit codes: 0 success, 2 usage error, 1 data/file error.
#pragma once

#include <string>
#include <vector>

namespace avse::cli {

int run(std::vector<std::string> args);  // args without the program name
int run(int argc, char** argv);

}  // namespace avse::cli
