#include "devtox/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return devtox::run(argc, argv, std::cout, std::cerr); }
