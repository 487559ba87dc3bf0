#include "twp/cli.hpp"

int main(int argc, char** argv) { return twp::cli::run(argc, argv); }
