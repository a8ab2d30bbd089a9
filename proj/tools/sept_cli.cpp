#include <iostream>

#include "sept/cli.hpp"
#include "sept/http_transport.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return sept::cli_main(args, std::cout, std::cerr, sept::http_transport());
}
