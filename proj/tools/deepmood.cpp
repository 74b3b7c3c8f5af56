// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "deepmood/cli/commands.hpp"

int main(int argc, char** argv) { return deepmood::cli::run(argc, argv, std::cout, std::cerr); }
