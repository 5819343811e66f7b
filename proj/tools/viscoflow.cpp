#include "viscoflow/cli.hpp"

int main(int argc, char** argv) { return viscoflow::cli::main(argc, argv); }
