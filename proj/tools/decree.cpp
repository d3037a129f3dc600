#include "decree/cli.hpp"

int main(int argc, char** argv) { return decree::cli::run(argc, argv); }
