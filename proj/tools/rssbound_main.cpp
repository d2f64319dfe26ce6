#include <string>
#include <vector>

#include "rssbound/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return rssbound::cli::run_subcommand(args);
}
