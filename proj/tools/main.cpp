#include "sdwanfp/cli.hpp"

int main(int argc, char** argv) { return sdwanfp::run_cli(argc, argv); }
