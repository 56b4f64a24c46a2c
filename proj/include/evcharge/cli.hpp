#pragma once

namespace evcharge {

// Entry point of the command-line tool. Returns 0 on success, 1 on usage or
// runtime errors, 2 when `certify --strict` rejects a trace.
int run_cli(int argc, char** argv);

}  // namespace evcharge
