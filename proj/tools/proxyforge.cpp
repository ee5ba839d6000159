#include "proxyforge/cli.hpp"

int main(int argc, char** argv) { return proxyforge::cli::run(argc, argv); }
