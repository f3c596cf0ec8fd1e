#include "cli.hpp"

int main(int argc, char** argv) { return mhmm::cli::cli_main(argc, argv); }
