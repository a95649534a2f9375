#include "medfx/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return medfx::run(argc, argv, std::cout, std::cerr); }
