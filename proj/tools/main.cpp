#include <iostream>

#include "illiq/cli.hpp"

int main(int argc, char** argv) {
    return illiq::run_command(argc, argv, std::cout, std::cerr);
}
