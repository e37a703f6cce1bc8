#include "thermopinn/cli.hpp"

int main(int argc, char** argv) { return thermopinn::run_cli(argc, argv); }
