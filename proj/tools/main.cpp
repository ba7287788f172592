#include "tic/cli.hpp"

int main(int argc, char** argv) { return tic::run(argc, argv); }
