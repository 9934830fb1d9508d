#include "floquet/cli_io.hpp"

int main(int argc, char** argv) { return floquet::run_command(argc, argv); }
