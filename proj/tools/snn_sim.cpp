#include "snn_sim/cli.hpp"

int main(int argc, char** argv) { return snn_sim::cli::run(argc, argv); }
