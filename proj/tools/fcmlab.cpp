#include <iostream>

#include "fcm/cli.hpp"

int main(int argc, char** argv) { return fcm::cli::main(argc, argv, std::cout, std::cerr); }
