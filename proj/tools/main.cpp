#include "cli.hpp"

int main(int argc, char** argv) { return exhier::cli::run(argc, argv, std::cout, std::cerr); }
