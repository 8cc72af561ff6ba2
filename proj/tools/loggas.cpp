#include "loggas/cli.hpp"

int main(int argc, char** argv) { return loggas::cli::main_entry(argc, argv); }
