#include "acpo/cli.hpp"

int main(int argc, char** argv) { return acpo::run_cli(argc, argv); }
