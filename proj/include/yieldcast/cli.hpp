#pragma once

namespace yieldcast {

// Parses argv, runs one subcommand and returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace yieldcast
