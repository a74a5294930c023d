#include <iostream>

#include "synlabel/cli.hpp"

int main(int argc, char** argv) { return synlabel::CliEntry(argc, argv, std::cout, std::cerr); }
