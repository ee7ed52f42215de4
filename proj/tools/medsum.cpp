#include "medsum/cli.hpp"

int main(int argc, char** argv) { return medsum::cli::run(argc, argv); }
