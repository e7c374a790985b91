#include "smrc/cli.hpp"

int main(int argc, char** argv) { return smrc::cli::run(argc, argv); }
