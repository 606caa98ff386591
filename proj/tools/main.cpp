#include "tunetext/cli.hpp"

int main(int argc, char** argv) { return tunetext::cli::run(argc, argv); }
