#pragma once

#include <cstddef>

namespace twp {

// Worker threads for CPU-parallel loops (signatures, tokenization).
// 0 = hardware concurrency.
void set_worker_count(std::size_t n);
std::size_t worker_count();

}  // namespace twp
