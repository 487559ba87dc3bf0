#pragma once

namespace twp::cli {

// Entry point for the `twp` tool. Exit codes: 0 ok, 1 stage failure,
// 2 usage or configuration error.
int run(int argc, char** argv);

}  // namespace twp::cli
