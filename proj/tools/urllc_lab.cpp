#include "urllc/cli.hpp"

int main(int argc, char** argv) { return urllc::run_cli(argc, argv); }
