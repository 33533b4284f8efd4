#include "segbias/cli.hpp"

int main(int argc, char** argv) { return segbias::cli_dispatch(argc, argv); }
