#include "isaacslab/cli.hpp"

int main(int argc, char** argv) { return isaacslab::cli::run(argc, argv); }
