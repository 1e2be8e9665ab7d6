// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "advcat/cli.hpp"

int main(int argc, char** argv) { return advcat::run_cli(argc, argv, std::cout, std::cerr); }
