#include "dropf/cli.hpp"

int main(int argc, char** argv) { return dropf::run_cli(argc, argv); }
