#pragma once

namespace pqvar {

//! Exit codes of the `pqvar` tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

//! Entry point of the `pqvar` command-line tool (fit / analyze / synth).
//! Never throws; errors are reported on stderr and mapped to an exit code.
int run_cli(int argc, char** argv);

} // namespace pqvar
