#include <iostream>
#include <string>
#include <vector>

#include "sealpy/cli/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    return sealpy::cli::run_cli(args, std::cout, std::cerr);
}
