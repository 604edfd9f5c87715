#include "ripple/commands.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return ripple::cli::run(argc, argv, std::cout, std::cerr);
}
