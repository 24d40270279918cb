#include "qc/grid.hpp"

#include <cmath>

#include "qc/error.hpp"

namespace qc {

Grid::Grid(std::vector<int> resolution) : res_(std::move(resolution))
{
    if (res_.empty() || res_.size() > 4) throw DomainError("Grid: dimension must be 1..4");
    size_ = 1;
    for (int n : res_) {
        if (n < 1) throw DomainError("Grid: resolution must be positive");
        size_ *= static_cast<std::size_t>(n);
    }
}

std::array<int, 4> Grid::multi_index(std::size_t i) const
{
    std::array<int, 4> m{0, 0, 0, 0};
    for (int k = dim() - 1; k >= 0; --k) {
        m[k] = static_cast<int>(i % res_[k]);
        i /= res_[k];
    }
    return m;
}

std::size_t Grid::flat_index(const std::array<int, 4>& m) const
{
    std::size_t i = 0;
    for (int k = 0; k < dim(); ++k) {
        int v = m[k] % res_[k];
        if (v < 0) v += res_[k];
        i = i * res_[k] + v;
    }
    return i;
}

TorusPoint Grid::node(std::size_t i) const
{
    auto m = multi_index(i);
    Vec c(dim());
    for (int k = 0; k < dim(); ++k) c[k] = double(m[k]) / res_[k];
    return TorusPoint(c);
}

int Grid::stencil(const TorusPoint& x, std::size_t* idx, double* w) const
{
    const int d = dim();
    int base[4];
    double t[4];
    for (int k = 0; k < d; ++k) {
        double u = x[k] * res_[k];
        double fl = std::floor(u);
        t[k] = u - fl;
        base[k] = static_cast<int>(fl) % res_[k];
    }
    const int n = 1 << d;
    for (int c = 0; c < n; ++c) {
        std::size_t i = 0;
        double wt = 1.0;
        for (int k = 0; k < d; ++k) {
            int bit = (c >> (d - 1 - k)) & 1;
            int v = base[k] + bit;
            if (v >= res_[k]) v -= res_[k];
            i = i * res_[k] + v;
            wt *= bit ? t[k] : 1.0 - t[k];
        }
        idx[c] = i;
        w[c] = wt;
    }
    return n;
}

} // namespace qc
