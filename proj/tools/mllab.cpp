#include "mllab/cli.hpp"

int main(int argc, char** argv) { return mllab::cli_main(argc, argv); }
