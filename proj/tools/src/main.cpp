#include "csynth_tools/commands.hpp"

int main(int argc, char** argv) { return csynth::cli::run(argc, argv); }
