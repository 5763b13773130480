// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
#include "cli.hpp"

int main(int argc, char** argv) { return avse::cli::run(argc, argv); }
