#include "beliefspace/cli.hpp"

int main(int argc, char** argv) { return beliefspace::cli::dispatch(argc, argv); }
