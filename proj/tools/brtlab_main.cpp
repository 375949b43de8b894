#include "brtlab/experiment.hpp"

int main(int argc, char** argv) { return brt::cli_main(argc, argv); }
