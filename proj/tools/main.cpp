#include <string>
#include <vector>

#include "flipplan/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return flipplan::run_cli(args);
}
