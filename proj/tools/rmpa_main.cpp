#include "rmpa/cli.hpp"

int main(int argc, char** argv) { return rmpa::cli::run(argc, argv); }
