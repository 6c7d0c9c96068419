#include <benchmark/benchmark.h>

// Own entry point: the packaged benchmark_main archive is LTO bytecode from a
// different compiler build and does not link.
BENCHMARK_MAIN();
