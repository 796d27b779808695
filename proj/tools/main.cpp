#include "fsm/cli.hpp"

int main(int argc, char** argv) { return fsm::cli::run(argc, argv); }
