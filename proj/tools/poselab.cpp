#include "poselab/cli.hpp"

int main(int argc, char** argv) { return poselab::cli::run(argc, argv); }
