#include "clcp/cli/app.hpp"

int main(int argc, char** argv) { return clcp::cli::run(argc, argv); }
