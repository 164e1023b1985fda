#include "safe/cli.hpp"

int main(int argc, char** argv) { return safe::cli::run_cli(argc, argv); }
