// SPDX-License-Identifier: Apache-2.0
#include "samtrack/cli.hpp"

int main(int argc, char** argv) { return samtrack::cli_main(argc, argv); }
