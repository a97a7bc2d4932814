#include <vector>

#include "contact/cli.hpp"

int main(int argc, char** argv) {
    return contact::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
