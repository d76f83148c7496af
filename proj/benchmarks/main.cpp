#include <benchmark/benchmark.h>

// Own main: the packaged benchmark_main archive is built with a mismatched LTO version.
BENCHMARK_MAIN();
