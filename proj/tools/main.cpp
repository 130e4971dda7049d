#include "cli.hpp"

int main(int argc, char** argv) { return angularpu::cli::run_cli(argc, argv); }
