//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hbgsa::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataFailure = 2,
  kNumericFailure = 3,
};

// Runs one invocation. `args` excludes the program name. Normal output goes
// to `out`; the resolved configuration and failure reasons go to `err`. A
// failure writes exactly one line "error: <kind>: <reason>" with kind one of
// usage, data or numeric.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

// Applies HBGSA_LOG (trace, debug, info, warn, error, off) to the logger.
void configure_logging();

}  // namespace hbgsa::cli
