#include "evcharge/cli.hpp"

int main(int argc, char** argv) { return evcharge::run_cli(argc, argv); }
