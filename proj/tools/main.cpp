#include "dualrate/cli.hpp"

int main(int argc, char** argv) { return dualrate::run_cli(argc, argv); }
