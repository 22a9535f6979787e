// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return sparsepose::cli::run_cli(argc, argv); }
