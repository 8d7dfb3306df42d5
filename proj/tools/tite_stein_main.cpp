#include "tite_stein/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return tite_stein::run_cli(argc, argv, std::cout, std::cerr);
}
