#include "depstat/cli.hpp"

int main(int argc, char** argv) { return depstat::run_cli(argc, argv); }
