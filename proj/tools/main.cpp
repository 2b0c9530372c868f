#include "xhmm_cli.hpp"

int main(int argc, char** argv) { return xhmm::cli::run(argc, argv); }
