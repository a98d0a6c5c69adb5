#pragma once

namespace assay {

// Entry point of the `assay` tool. Returns the process exit code: 0 on
// success, 2 for usage errors, 1 for any other failure.
int run_cli(int argc, char** argv);

}  // namespace assay
