#include "cli.hpp"

int main(int argc, char** argv) { return slicegcn::cli::run(argc, argv); }
