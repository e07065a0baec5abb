#include "fusiongen/cli.hpp"

int main(int argc, char** argv) { return fusiongen::cli::dispatch(argc, argv); }
