#include "rrm/cli.hpp"

int main(int argc, char** argv) { return rrm::cli::run(argc, argv); }
