#include <iostream>

#include "flockdde/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return flockdde::run_cli(args, std::cout, std::cerr);
}
