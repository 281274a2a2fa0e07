#include "oplab_cli.hpp"

int main(int argc, char** argv) { return oplab::cli::run(argc, argv); }
