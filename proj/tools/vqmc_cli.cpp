#include <iostream>

#include "vqmc/driver.hpp"

int main(int argc, char** argv) { return vqmc::cli_main(argc, argv, std::cout, std::cerr); }
