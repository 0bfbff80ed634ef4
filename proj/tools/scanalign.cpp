#include <iostream>

#include "scanalign/pipeline.hpp"

int main(int argc, char** argv) { return scanalign::run_cli(argc, argv, std::cout, std::cerr); }
