#include <iostream>
#include <vector>

#include "sts/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sts::run_cli(args, std::cout, std::cerr);
}
