#include <string>
#include <vector>

#include "sllcert/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sllcert::cli::run(std::move(args));
}
