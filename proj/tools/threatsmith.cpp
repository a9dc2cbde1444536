#include "threatsmith/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return threatsmith::cli::run(argc, argv, std::cout, std::cerr);
}
