// SPDX-License-Identifier: MIT
#include "kortile/cli.hpp"

int main(int argc, char** argv) { return kortile::cli::dispatch(argc, argv); }
