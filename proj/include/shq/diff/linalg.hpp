#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace shq::detail {

std::vector<double> transpose(std::span<const double> a, std::size_t rows, std::size_t cols);

// c += a[m,k] * b[k,n]
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                     std::span<double> c);

}  // namespace shq::detail
