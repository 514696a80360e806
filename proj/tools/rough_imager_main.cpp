#include "rsi/cli.hpp"

int main(int argc, char** argv) { return rsi::cli_main(argc, argv); }
