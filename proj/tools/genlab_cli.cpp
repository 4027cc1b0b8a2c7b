#include "genlab/app/cli.hpp"

int main(int argc, char** argv) { return genlab::run_cli(argc, argv); }
