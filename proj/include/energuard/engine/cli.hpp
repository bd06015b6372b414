#pragma once

namespace energuard::engine {

// Entry point behind the command-line tool. Subcommands: collect, train,
// evaluate, monitor, bench-overhead, dataset. Returns 0 on success, 1 on
// runtime errors, 2 on usage errors.
int cli_dispatch(int argc, const char* const* argv);

}  // namespace energuard::engine
