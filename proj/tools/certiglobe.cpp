#include "certiglobe/cli.hpp"

int main(int argc, char** argv) { return certiglobe::cli::run(argc, argv); }
