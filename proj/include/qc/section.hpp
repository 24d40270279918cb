#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "qc/grid.hpp"
#include "qc/splitting.hpp"
#include "qc/torus.hpp"

namespace qc {

using Field = std::function<Vec(const TorusPoint&)>;

// Grid-sampled vector field (or scalar function when components = 1) with
// periodic multilinear interpolation.
class Section {
public:
    Section() = default;
    explicit Section(Grid grid, int components = -1);

    const Grid& grid() const { return grid_; }
    int components() const { return nc_; }
    std::size_t size() const { return grid_.size(); }

    Vec value(std::size_t i) const;
    void set(std::size_t i, const Vec& v);
    const std::vector<double>& raw() const { return *v_; }
    std::vector<double>& raw_mut();

    Vec eval(const TorusPoint& x) const;
    TangentVector eval_tangent(const TorusPoint& x) const { return {x, eval(x)}; }
    // interpolant as a Field; shares the value buffer
    Field field() const;

    Section& operator+=(const Section& o);
    Section& operator-=(const Section& o);
    Section& operator*=(double a);

private:
    Grid grid_;
    int nc_ = 0;
    std::shared_ptr<std::vector<double>> v_;
};

Section operator+(Section a, const Section& b);
Section operator-(Section a, const Section& b);
Section operator*(double a, Section s);

Section sample_section(const Grid& grid, const Field& generator, int components = -1);
Section zero_section(const Grid& grid, int components = -1);

double sup_norm(const Section& s);
double norm1(const Section& s, const Splitting& S);
// sup-norms of the center and us parts
std::pair<double, double> norm_parts(const Section& s, const Splitting& S);

struct SplitSection {
    Section u_part;
    Section v_part;
};

SplitSection split(const Section& s, const Splitting& S);
Section combine(const SplitSection& ss);

// balls B(eps), B^us(eps), B_1(eps)
bool in_ball(const Section& s, double eps);
bool in_ball_us(const Section& s, const Splitting& S, double eps);
bool in_ball1(const Section& s, const Splitting& S, double eps);

void write_binary(const Section& s, const std::string& path);
Section read_binary(const std::string& path);
nlohmann::json to_json(const Section& s);
Section section_from_json(const nlohmann::json& j);

} // namespace qc
