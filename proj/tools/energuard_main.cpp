#include "energuard/engine/cli.hpp"

int main(int argc, char** argv) { return energuard::engine::cli_dispatch(argc, argv); }
