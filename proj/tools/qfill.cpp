// SPDX-License-Identifier: Apache-2.0
#include "qfill/cli/cli.hpp"

#include <iostream>

int main(int argc, char **argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return qfill::cli::run(args, std::cout, std::cerr);
}
