#include "monopole/cli.hpp"

int main(int argc, char** argv) { return monopole::cli::run(argc, argv); }
