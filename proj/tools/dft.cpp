#include "dft/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return dft::run_command({argv + 1, argv + argc}, std::cout, std::cerr);
}
