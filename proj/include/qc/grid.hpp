#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "qc/torus.hpp"

namespace qc {

// Regular periodic grid on T^d; node i has coordinates (i_k / N_k), row-major
// with the last axis fastest.
class Grid {
public:
    Grid() = default;
    explicit Grid(std::vector<int> resolution);
    static Grid cube(int d, int n) { return Grid(std::vector<int>(d, n)); }

    int dim() const { return static_cast<int>(res_.size()); }
    const std::vector<int>& resolution() const { return res_; }
    std::size_t size() const { return size_; }
    TorusPoint node(std::size_t i) const;
    std::array<int, 4> multi_index(std::size_t i) const;
    std::size_t flat_index(const std::array<int, 4>& m) const; // indices taken mod N
    bool operator==(const Grid& o) const { return res_ == o.res_; }

    // multilinear interpolation stencil: fills 2^d node indices and weights
    int stencil(const TorusPoint& x, std::size_t* idx, double* w) const;

private:
    std::vector<int> res_;
    std::size_t size_ = 0;
};

} // namespace qc
