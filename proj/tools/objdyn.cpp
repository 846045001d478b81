#include "objdyn/cli.hpp"

int main(int argc, char** argv) { return objdyn::cli::run(argc, argv); }
