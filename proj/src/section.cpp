#include "qc/section.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "qc/error.hpp"

namespace qc {

namespace {

const char kMagic[8] = {'Q', 'C', 'S', 'E', 'C', 'T', '0', '1'};

void require_same_grid(const Section& a, const Section& b)
{
    if (!(a.grid() == b.grid()) || a.components() != b.components())
        throw DomainError("section arithmetic: grids differ");
}

} // namespace

Section::Section(Grid grid, int components) : grid_(std::move(grid))
{
    nc_ = components > 0 ? components : grid_.dim();
    v_ = std::make_shared<std::vector<double>>(grid_.size() * nc_, 0.0);
}

Vec Section::value(std::size_t i) const
{
    Vec v(nc_);
    const double* p = v_->data() + i * nc_;
    for (int k = 0; k < nc_; ++k) v[k] = p[k];
    return v;
}

std::vector<double>& Section::raw_mut()
{
    if (v_.use_count() > 1) v_ = std::make_shared<std::vector<double>>(*v_);
    return *v_;
}

void Section::set(std::size_t i, const Vec& v)
{
    if (v.size() != nc_) throw DomainError("Section::set: component count mismatch");
    auto& r = raw_mut();
    for (int k = 0; k < nc_; ++k) {
        if (!std::isfinite(v[k])) throw DomainError("Section: non-finite value");
        r[i * nc_ + k] = v[k];
    }
}

Vec Section::eval(const TorusPoint& x) const
{
    std::size_t idx[16];
    double w[16];
    int n = grid_.stencil(x, idx, w);
    Vec out = Vec::Zero(nc_);
    const double* p = v_->data();
    for (int c = 0; c < n; ++c) {
        if (w[c] == 0.0) continue;
        const double* q = p + idx[c] * nc_;
        for (int k = 0; k < nc_; ++k) out[k] += w[c] * q[k];
    }
    return out;
}

Field Section::field() const
{
    Section copy = *this; // shares the buffer
    return [copy](const TorusPoint& x) { return copy.eval(x); };
}

Section& Section::operator+=(const Section& o)
{
    require_same_grid(*this, o);
    auto& r = raw_mut();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += (*o.v_)[i];
    return *this;
}

Section& Section::operator-=(const Section& o)
{
    require_same_grid(*this, o);
    auto& r = raw_mut();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= (*o.v_)[i];
    return *this;
}

Section& Section::operator*=(double a)
{
    auto& r = raw_mut();
    for (double& x : r) x *= a;
    return *this;
}

Section operator+(Section a, const Section& b) { return a += b; }
Section operator-(Section a, const Section& b) { return a -= b; }
Section operator*(double a, Section s) { return s *= a; }

Section sample_section(const Grid& grid, const Field& generator, int components)
{
    Section s(grid, components);
    auto& r = s.raw_mut();
    const int nc = s.components();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Vec v = generator(grid.node(i));
        if (v.size() != nc) throw DomainError("sample_section: generator returned wrong size");
        for (int k = 0; k < nc; ++k) {
            if (!std::isfinite(v[k])) throw DomainError("sample_section: non-finite value");
            r[i * nc + k] = v[k];
        }
    }
    return s;
}

Section zero_section(const Grid& grid, int components) { return Section(grid, components); }

double sup_norm(const Section& s)
{
    double m = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) m = std::max(m, s.value(i).norm());
    return m;
}

std::pair<double, double> norm_parts(const Section& s, const Splitting& S)
{
    double mc = 0.0, mus = 0.0;
    Frame fr = S.is_constant() ? S.constant_frame() : Frame{};
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!S.is_constant()) fr = S.at(s.grid().node(i));
        Vec w = s.value(i);
        Vec c = fr.part(Block::c, w);
        mc = std::max(mc, c.norm());
        mus = std::max(mus, (w - c).norm());
    }
    return {mc, mus};
}

double norm1(const Section& s, const Splitting& S)
{
    auto [c, us] = norm_parts(s, S);
    return c + us;
}

SplitSection split(const Section& s, const Splitting& S)
{
    SplitSection out{Section(s.grid(), s.components()), Section(s.grid(), s.components())};
    Frame fr = S.is_constant() ? S.constant_frame() : Frame{};
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!S.is_constant()) fr = S.at(s.grid().node(i));
        Vec w = s.value(i);
        Vec c = fr.part(Block::c, w);
        out.u_part.set(i, c);
        out.v_part.set(i, w - c);
    }
    return out;
}

Section combine(const SplitSection& ss) { return ss.u_part + ss.v_part; }

bool in_ball(const Section& s, double eps) { return sup_norm(s) <= eps; }

bool in_ball_us(const Section& s, const Splitting& S, double eps)
{
    auto [c, us] = norm_parts(s, S);
    return c <= 1e-10 && us <= eps;
}

bool in_ball1(const Section& s, const Splitting& S, double eps) { return norm1(s, S) <= eps; }

void write_binary(const Section& s, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_binary: cannot open " + path);
    out.write(kMagic, 8);
    std::int32_t d = s.grid().dim(), nc = s.components();
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(&nc), 4);
    for (int r : s.grid().resolution()) {
        std::int32_t rr = r;
        out.write(reinterpret_cast<const char*>(&rr), 4);
    }
    out.write(reinterpret_cast<const char*>(s.raw().data()), std::streamsize(s.raw().size() * sizeof(double)));
}

Section read_binary(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("read_binary: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw Error("read_binary: bad header in " + path);
    std::int32_t d = 0, nc = 0;
    in.read(reinterpret_cast<char*>(&d), 4);
    in.read(reinterpret_cast<char*>(&nc), 4);
    if (d < 1 || d > 4 || nc < 1 || nc > 4) throw Error("read_binary: bad header in " + path);
    std::vector<int> res(d);
    for (int k = 0; k < d; ++k) {
        std::int32_t r = 0;
        in.read(reinterpret_cast<char*>(&r), 4);
        res[k] = r;
    }
    Section s(Grid(res), nc);
    auto& raw = s.raw_mut();
    in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size() * sizeof(double)));
    if (!in) throw Error("read_binary: truncated file " + path);
    return s;
}

nlohmann::json to_json(const Section& s)
{
    nlohmann::json j;
    j["resolution"] = s.grid().resolution();
    j["components"] = s.components();
    j["values"] = s.raw();
    return j;
}

Section section_from_json(const nlohmann::json& j)
{
    std::vector<int> res = j.at("resolution").get<std::vector<int>>();
    int nc = j.at("components").get<int>();
    Section s(Grid(res), nc);
    auto vals = j.at("values").get<std::vector<double>>();
    if (vals.size() != s.raw().size()) throw Error("section_from_json: value count mismatch");
    s.raw_mut() = vals;
    return s;
}

} // namespace qc
