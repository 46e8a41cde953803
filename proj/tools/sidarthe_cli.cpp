#include "sidarthe/run_cli.hpp"

int main(int argc, char** argv) { return sidarthe::cli::run_cli(argc, argv); }
