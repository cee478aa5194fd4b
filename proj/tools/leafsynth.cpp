#include "leafsynth/cli.hpp"

int main(int argc, char** argv) { return leafsynth::run_cli(argc, argv); }
