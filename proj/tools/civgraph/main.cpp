#include "commands.hpp"

int main(int argc, char** argv) { return civgraph::cli::run(argc, argv); }
