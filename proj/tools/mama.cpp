#include "mama/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return mama::cli::run(argc, argv, std::cout, std::cerr);
}
