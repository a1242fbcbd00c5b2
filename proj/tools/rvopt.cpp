#include "rvopt/cli.hpp"

int main(int argc, char** argv) { return rvopt::run_cli(argc, argv); }
