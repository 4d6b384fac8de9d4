#include <string>
#include <vector>

#include "srcl/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return srcl::cli::run(args);
}
