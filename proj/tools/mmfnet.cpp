#include <iostream>
#include <string>
#include <vector>

#include "mmfnet/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return mmfnet::cli::run(args, std::cout, std::cerr);
}
