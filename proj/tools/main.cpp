#include "cli.hpp"

int main(int argc, char **argv) { return fsqkit::cli::run(argc, argv); }
