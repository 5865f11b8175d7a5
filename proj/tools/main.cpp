#include <iostream>
#include <string>
#include <vector>

#include "ndd/cli_io.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ndd::run_cli(args, std::cout, std::cerr);
}
