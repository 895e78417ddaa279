#pragma once

#include <iosfwd>

namespace swapgrid::cli
{

/// Entry point of the `swapgrid` tool. Returns the process exit code:
/// 0 success, 1 algorithm did not converge (artifacts written), 2 input or
/// module error (error JSON on `err`).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace swapgrid::cli
