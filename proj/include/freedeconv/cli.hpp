#pragma once

namespace freedeconv {

/// Entry point of the freedeconv executable. Returns the process exit code:
/// 0 ok, 2 configuration, 3 convergence, 4 I/O.
int run_cli(int argc, char** argv);

}  // namespace freedeconv
