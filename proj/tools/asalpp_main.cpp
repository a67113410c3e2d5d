#include "asalpp/cli/cli.hpp"

int main(int argc, char** argv) { return asalpp::cli_main(argc, argv); }
