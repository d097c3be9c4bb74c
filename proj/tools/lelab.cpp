#include "lelab/cli.hpp"

int main(int argc, char** argv) { return lelab::cli::run(argc, argv); }
