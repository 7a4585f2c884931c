#include "smartfl/cli.hpp"

int main(int argc, char** argv) { return smartfl::run_cli(argc, argv); }
