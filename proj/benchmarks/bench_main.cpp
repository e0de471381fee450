// Copyright 2026 The hallab Authors
// SPDX-License-Identifier: Apache-2.0

// The packaged benchmark_main archive carries LTO bytecode from another
// compiler release, so the entry point is compiled here.
#include <benchmark/benchmark.h>

BENCHMARK_MAIN();
