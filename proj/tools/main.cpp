// Copyright (C) 2026 obbkit contributors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return obbkit::cli::run(argc, argv); }
