#pragma once

namespace plab {

/// Command-line front end. Exit codes: 0 when all scenario thresholds are
/// met, 1 on a verdict failure, 2 on configuration or usage errors.
int run_cli(int argc, const char* const* argv);

}  // namespace plab
