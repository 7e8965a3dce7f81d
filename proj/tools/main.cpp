#include "quretec/cli.hpp"

int main(int argc, char** argv) { return quretec::cli::run(argc, argv); }
