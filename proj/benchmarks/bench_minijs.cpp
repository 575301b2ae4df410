#include <benchmark/benchmark.h>
#include "analearn/minijs.hpp"
int __placeholder;
