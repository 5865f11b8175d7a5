#pragma once

#include <cstddef>
#include <vector>

namespace ndd {

// Minimal row-major matrix. The library needs tables of compositions and a
// handful of reductions, not general linear algebra.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    const double* row(std::size_t r) const { return a.data() + r * cols; }
    double* row(std::size_t r) { return a.data() + r * cols; }
};

} // namespace ndd
