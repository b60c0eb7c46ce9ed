// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return bodylink::cli::run(argc, argv, std::cout, std::cerr); }
