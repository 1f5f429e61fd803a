#include "cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return corgs::cli::run(argc, argv, std::cout, std::cerr);
}
