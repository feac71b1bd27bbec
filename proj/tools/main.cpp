#include <iostream>

#include "cli/commands.hpp"

int main(int argc, char** argv) { return perc::cli::run(argc, argv, std::cerr); }
