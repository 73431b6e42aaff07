#include "deeptrust/cli.hpp"

int main(int argc, char** argv) { return deeptrust::cli::run(argc, argv); }
