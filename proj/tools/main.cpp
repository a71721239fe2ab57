//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char **argv) {
  hbgsa::cli::configure_logging();
  const std::vector<std::string> args(argv + 1, argv + argc);
  return hbgsa::cli::run(args, std::cout, std::cerr);
}
