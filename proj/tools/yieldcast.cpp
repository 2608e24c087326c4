#include "yieldcast/cli.hpp"

int main(int argc, char** argv) { return yieldcast::run_cli(argc, argv); }
