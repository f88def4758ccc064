#include "freedeconv/cli.hpp"

int main(int argc, char** argv) { return freedeconv::run_cli(argc, argv); }
