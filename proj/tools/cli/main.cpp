#include "runner.hpp"

int main(int argc, char** argv) { return oulcut::cli::main_entry(argc, argv); }
