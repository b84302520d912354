// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "pc/cli.hpp"

int main(int argc, char** argv) { return pc::cli::run(argc, argv, std::cin, std::cout, std::cerr); }
