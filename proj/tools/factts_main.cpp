#include "factts/harness.hpp"

int main(int argc, char** argv) { return factts::cli_main(argc, argv); }
