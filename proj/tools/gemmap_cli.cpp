#include "gemmap/cli.hpp"

int main(int argc, char** argv) { return gemmap::cli_main(argc, argv); }
