#include "qcp/cli.hpp"

int main(int argc, char** argv) { return qcp::cli::run(argc, argv); }
