#pragma once

namespace asalpp {

/// Entry point behind the asalpp binary. Exit codes: 0 success, 2 truncated
/// run (evolver gave up early), 1 any error.
int cli_main(int argc, const char* const* argv);

}  // namespace asalpp
