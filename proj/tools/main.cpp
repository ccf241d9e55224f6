#include "ima/cli.hpp"

int main(int argc, char** argv) { return ima::cli::run(argc, argv); }
