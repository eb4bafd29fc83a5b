#include "cli_commands.hpp"

int main(int argc, char** argv) { return tellipsoid::cli::run_cli(argc, argv); }
