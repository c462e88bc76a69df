#pragma once

namespace augkit::cli {

// Entry point behind the binary. Exit codes: 0 success, 1 validation or
// usage error, 2 I/O or backend failure.
int run(int argc, const char* const* argv);

} // namespace augkit::cli
