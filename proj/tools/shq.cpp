#include "shq/cli/commands.hpp"

int main(int argc, char** argv) { return shq::cli::run_cli(argc, argv); }
