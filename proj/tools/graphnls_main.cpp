#include "graphnls/cli.hpp"

int main(int argc, char** argv) { return graphnls::cli::run(argc, argv); }
