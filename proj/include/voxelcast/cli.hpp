#pragma once

#include <ostream>

namespace voxelcast {

/// Exit codes: 0 success, 1 domain error (JSON on `err`), 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace voxelcast
