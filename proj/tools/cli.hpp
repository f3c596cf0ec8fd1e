#pragma once

namespace mhmm::cli {

// Entry point of the command-line tool; returns the process exit status
// (0 success, 2 validation/usage errors, 1 runtime errors). Split from
// main() so tests can drive the tool in-process.
int cli_main(int argc, const char* const* argv);

}  // namespace mhmm::cli
