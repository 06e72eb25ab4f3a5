#include "mlspeak/cli.hpp"

int main(int argc, char** argv) { return mlspeak::run_command(argc, argv); }
