#include "tmhd/cli.hpp"

int main(int argc, char** argv) { return tmhd::run_command(argc, argv); }
