#include "nvmark/cli.hpp"

int main(int argc, char** argv) { return nvm::cli_main(argc, argv); }
