#include <iostream>

#include "emgm/cli.hpp"

int main(int argc, char** argv) { return emgm::parse_and_dispatch(argc, argv, std::cout, std::cerr); }
