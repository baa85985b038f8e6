#include "effrec/cli.hpp"

int main(int argc, char** argv) { return effrec::cli::run(argc, argv); }
