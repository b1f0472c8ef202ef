#include "zskl/cli.hpp"

int main(int argc, char **argv) { return zskl::cli::run(argc, argv); }
