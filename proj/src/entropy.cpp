#include "qc/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "qc/error.hpp"

namespace qc {

namespace {

double triangle_area(const Vec& a, const Vec& b)
{
    double aa = a.squaredNorm(), bb = b.squaredNorm(), ab = a.dot(b);
    return 0.5 * std::sqrt(std::max(0.0, aa * bb - ab * ab));
}

// length of {t in [0,1] : |a + t d| < r} times |d|
double clipped_length(const Vec& a, const Vec& d, double r)
{
    double dd = d.squaredNorm();
    if (dd == 0.0) return 0.0;
    double b = a.dot(d), c = a.squaredNorm() - r * r;
    double disc = b * b - dd * c;
    if (disc <= 0.0) return 0.0;
    double s = std::sqrt(disc);
    double t0 = std::max(0.0, (-b - s) / dd), t1 = std::min(1.0, (-b + s) / dd);
    return t1 > t0 ? (t1 - t0) * std::sqrt(dd) : 0.0;
}

double triangle_ball_area(const Vec& a, const Vec& b, const Vec& c, double r, int depth)
{
    double ra = a.norm(), rb = b.norm(), rc = c.norm();
    double diam = std::max({(b - a).norm(), (c - a).norm(), (c - b).norm()});
    double area = triangle_area(b - a, c - a);
    if (ra < r && rb < r && rc < r) return area;
    if (std::min({ra, rb, rc}) > r + diam) return 0.0;
    if (depth == 0) return ((a + b + c) / 3.0).norm() < r ? area : 0.0;
    Vec ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
    return triangle_ball_area(a, ab, ca, r, depth - 1) + triangle_ball_area(ab, b, bc, r, depth - 1) +
           triangle_ball_area(ca, bc, c, r, depth - 1) + triangle_ball_area(ab, bc, ca, r, depth - 1);
}

double point_segment(const Vec& p, const Vec& a, const Vec& b)
{
    Vec d = b - a;
    double dd = d.squaredNorm();
    double t = dd > 0.0 ? std::clamp((p - a).dot(d) / dd, 0.0, 1.0) : 0.0;
    return (a + t * d - p).norm();
}

double point_triangle(const Vec& p, const Vec& a, const Vec& b, const Vec& c)
{
    Mat m(a.size(), 2);
    m.col(0) = b - a;
    m.col(1) = c - a;
    Eigen::Vector2d st = (m.transpose() * m).ldlt().solve(m.transpose() * (p - a));
    if (st[0] >= 0.0 && st[1] >= 0.0 && st[0] + st[1] <= 1.0) return (a + m * st - p).norm();
    return std::min({point_segment(p, a, b), point_segment(p, b, c), point_segment(p, c, a)});
}

// parameter -> point of the seeded disk
struct DiskSeed {
    const Chart* chart;
    TorusPoint x;
    Mat E;
    TorusPoint at(const std::array<double, 2>& s) const
    {
        Vec v = E.col(0) * s[0];
        if (E.cols() > 1) v += E.col(1) * s[1];
        return chart->advance(x, v);
    }
};

class Disk {
public:
    Disk(const MapSpec& f, const Splitting& S, const TorusPoint& x, double r, const DiskOptions& opt)
        : f_(f), opt_(opt)
    {
        if (!(r > 0.0 && r < 0.25)) throw DomainError("unstable disk: radius must lie in (0, 1/4)");
        if (!(opt.segment_cap > 0.0 && opt.segment_cap < 0.25)) throw DomainError("unstable disk: bad segment cap");
        if (S.dim() != f.dim()) throw DomainError("unstable disk: splitting dimension mismatch");
        k_ = S.du();
        if (k_ != 1 && k_ != 2) throw DomainError("unstable disk: needs an unstable dimension of 1 or 2");
        Frame fr = S.is_constant() ? S.constant_frame() : S.at(x);
        seed_ = DiskSeed{&f.chart(), x, fr.block_basis(Block::u)};
        int m = std::max(1, static_cast<int>(std::ceil(2.0 * r / opt.segment_cap)));
        if (k_ == 1) {
            for (int i = 0; i <= m; ++i) add({-r + 2.0 * r * i / m, 0.0});
            for (int i = 0; i < m; ++i) cells_.push_back({i, i + 1, 0});
        } else {
            for (int i = 0; i <= m; ++i)
                for (int j = 0; j <= m; ++j) add({-r + 2.0 * r * i / m, -r + 2.0 * r * j / m});
            auto id = [m](int i, int j) { return i * (m + 1) + j; };
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    cells_.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
                    cells_.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
                }
        }
    }

    // one more application of f; false if the vertex budget ran out
    bool step()
    {
        ++n_;
        for (auto& p : pts_) p = f_.forward(p);
        return refine();
    }

    double volume() const { return mesh_view().volume(); }
    int k() const { return k_; }

    Mesh mesh() const
    {
        Mesh m = mesh_view();
        return m;
    }

private:
    Mesh mesh_view() const
    {
        Mesh m;
        m.k = k_;
        m.pts = pts_;
        m.cells = cells_;
        m.chart = f_.chart_ptr();
        return m;
    }

    int add(const std::array<double, 2>& s)
    {
        TorusPoint p = seed_.at(s);
        for (int i = 0; i < n_; ++i) p = f_.forward(p);
        params_.push_back(s);
        pts_.push_back(p);
        return static_cast<int>(pts_.size()) - 1;
    }

    double edge(int a, int b) const { return f_.chart().distance(pts_[a], pts_[b]); }

    int midpoint(int a, int b)
    {
        std::uint64_t key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint32_t>(std::max(a, b));
        auto it = mid_.find(key);
        if (it != mid_.end()) return it->second;
        int m = add({0.5 * (params_[a][0] + params_[b][0]), 0.5 * (params_[a][1] + params_[b][1])});
        mid_.emplace(key, m);
        return m;
    }

    bool refine()
    {
        const double cap = opt_.segment_cap;
        mid_.clear();
        std::vector<std::array<int, 3>> work(cells_.rbegin(), cells_.rend()), done;
        done.reserve(cells_.size());
        while (!work.empty()) {
            auto c = work.back();
            work.pop_back();
            if (k_ == 1) {
                if (edge(c[0], c[1]) <= cap) {
                    done.push_back(c);
                    continue;
                }
                int m = midpoint(c[0], c[1]);
                work.push_back({m, c[1], 0});
                work.push_back({c[0], m, 0});
            } else {
                double e[3] = {edge(c[0], c[1]), edge(c[1], c[2]), edge(c[2], c[0])};
                int j = static_cast<int>(std::max_element(e, e + 3) - e);
                if (e[j] <= cap) {
                    done.push_back(c);
                    continue;
                }
                int a = c[j], b = c[(j + 1) % 3], o = c[(j + 2) % 3];
                int m = midpoint(a, b);
                work.push_back({a, m, o});
                work.push_back({m, b, o});
            }
            if (pts_.size() > opt_.max_vertices) return false;
        }
        // keep polyline cells in parameter order
        cells_ = std::move(done);
        return true;
    }

    const MapSpec& f_;
    DiskOptions opt_;
    int k_ = 1;
    int n_ = 0;
    DiskSeed seed_;
    std::vector<std::array<double, 2>> params_;
    std::vector<TorusPoint> pts_;
    std::vector<std::array<int, 3>> cells_;
    std::unordered_map<std::uint64_t, int> mid_;
};

// periodic cell hash for neighbour queries on the last orbit point
class CellHash {
public:
    CellHash(int d, double eps) : d_(d)
    {
        n_ = std::max(1, static_cast<int>(std::floor(1.0 / eps)));
    }
    std::uint64_t key(const std::array<int, 4>& c) const
    {
        std::uint64_t k = 0;
        for (int i = 0; i < d_; ++i) k = k * static_cast<std::uint64_t>(n_) + static_cast<std::uint64_t>(c[i]);
        return k;
    }
    std::array<int, 4> cell(const TorusPoint& p) const
    {
        std::array<int, 4> c{};
        for (int i = 0; i < d_; ++i) c[i] = std::min(n_ - 1, static_cast<int>(p[i] * n_));
        return c;
    }
    void insert(const TorusPoint& p, int id) { map_[key(cell(p))].push_back(id); }
    template <class F> bool any_neighbour(const TorusPoint& p, F&& f) const
    {
        std::array<int, 4> c = cell(p);
        int span = n_ >= 3 ? 3 : n_;
        int total = 1;
        for (int i = 0; i < d_; ++i) total *= span;
        for (int t = 0; t < total; ++t) {
            std::array<int, 4> q{};
            int r = t;
            for (int i = 0; i < d_; ++i) {
                int o = r % span - (span == 3 ? 1 : 0);
                r /= span;
                q[i] = ((c[i] + o) % n_ + n_) % n_;
            }
            auto it = map_.find(key(q));
            if (it == map_.end()) continue;
            for (int id : it->second)
                if (f(id)) return true;
        }
        return false;
    }

private:
    int d_, n_;
    std::unordered_map<std::uint64_t, std::vector<int>> map_;
};

std::size_t greedy_separated(const std::vector<TorusPoint>& orbit, std::size_t M, int m, double eps, const Chart& chart,
                             std::size_t stop_at)
{
    const int d = orbit.front().dim();
    CellHash hash(d, eps);
    std::vector<int> chosen;
    TorusPoint alt[4];
    const std::size_t last = static_cast<std::size_t>(m - 1) * M;
    for (std::size_t i = 0; i < M; ++i) {
        const TorusPoint& p = orbit[last + i];
        bool covered = hash.any_neighbour(p, [&](int j) {
            for (int k = m - 1; k >= 0; --k) {
                std::size_t off = static_cast<std::size_t>(k) * M;
                if (chart.distance(orbit[off + i], orbit[off + j]) > eps) return false;
            }
            return true;
        });
        if (covered) continue;
        int id = static_cast<int>(i);
        chosen.push_back(id);
        hash.insert(p, id);
        int na = chart.alternates(p, eps, alt);
        for (int a = 0; a < na; ++a) hash.insert(alt[a], id);
        if (chosen.size() > stop_at) break;
    }
    return chosen.size();
}

} // namespace

// ---------------------------------------------------------------------------
// Mesh

double Mesh::cell_volume(std::size_t c) const
{
    const auto& q = cells[c];
    Vec a = chart->offset(pts[q[0]], pts[q[1]]);
    if (k == 1) return a.norm();
    return triangle_area(a, chart->offset(pts[q[0]], pts[q[2]]));
}

double Mesh::volume() const
{
    double v = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) v += cell_volume(c);
    return v;
}

double Mesh::ball_volume(const TorusPoint& y, double r) const
{
    if (!(r > 0.0 && r < 0.25)) throw DomainError("ball_volume: radius must lie in (0, 1/4)");
    double v = 0.0;
    for (const auto& q : cells) {
        Vec a = chart->offset(y, pts[q[0]]);
        Vec e1 = chart->offset(pts[q[0]], pts[q[1]]);
        if (a.norm() > r + e1.norm() + (k == 2 ? chart->distance(pts[q[0]], pts[q[2]]) : 0.0)) continue;
        if (k == 1) {
            v += clipped_length(a, e1, r);
        } else {
            Vec e2 = chart->offset(pts[q[0]], pts[q[2]]);
            v += triangle_ball_area(a, a + e1, a + e2, r, 6);
        }
    }
    return v;
}

double Mesh::distance_to(const TorusPoint& p) const
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : cells) {
        Vec a = chart->offset(p, pts[q[0]]);
        Vec b = a + chart->offset(pts[q[0]], pts[q[1]]);
        Vec zero = Vec::Zero(a.size());
        if (k == 1) {
            best = std::min(best, point_segment(zero, a, b));
        } else {
            Vec c = a + chart->offset(pts[q[0]], pts[q[2]]);
            best = std::min(best, point_triangle(zero, a, b, c));
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// growth series

double fit_growth_slope(const std::vector<int>& n, const std::vector<double>& volumes)
{
    if (n.size() != volumes.size() || n.size() < 2) return 0.0;
    const int n_last = n.back();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (2 * n[i] < n_last) continue;
        double x = n[i], y = std::log(volumes[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    double den = cnt * sxx - sx * sx;
    if (cnt < 2 || den <= 0.0) return 0.0;
    return (cnt * sxy - sx * sy) / den;
}

GrowthSeries iterate_unstable_disk(const MapSpec& f, const Splitting& S, const TorusPoint& x, double r, int n_max,
                                   const DiskOptions& opt)
{
    if (n_max < 1) throw DomainError("iterate_unstable_disk: n_max must be positive");
    Disk disk(f, S, x, r, opt);
    GrowthSeries g;
    g.unstable_dim = disk.k();
    g.n_values.push_back(0);
    g.volumes.push_back(disk.volume());
    for (int n = 1; n <= n_max; ++n) {
        if (!disk.step()) {
            g.budget_exceeded = true;
            break;
        }
        g.n_values.push_back(n);
        g.volumes.push_back(disk.volume());
    }
    g.slope = fit_growth_slope(g.n_values, g.volumes);
    return g;
}

std::optional<Mesh> unstable_disk_image(const MapSpec& f, const Splitting& S, const TorusPoint& x, double r, int n,
                                        const DiskOptions& opt)
{
    if (n < 0) throw DomainError("unstable_disk_image: n must be non-negative");
    Disk disk(f, S, x, r, opt);
    for (int i = 0; i < n; ++i)
        if (!disk.step()) return std::nullopt;
    return disk.mesh();
}

nlohmann::json GrowthSeries::to_json() const
{
    return {{"n", n_values}, {"volume", volumes}, {"slope", slope}, {"unstable_dim", unstable_dim},
            {"budget_exceeded", budget_exceeded}};
}

std::vector<TorusPoint> random_points(int d, int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TorusPoint> out;
    for (int i = 0; i < n; ++i) {
        Vec x(d);
        for (int j = 0; j < d; ++j) x[j] = u(rng);
        out.emplace_back(x);
    }
    return out;
}

ChiReport chi_u(const MapSpec& f, const Splitting& S, const std::vector<TorusPoint>& samples, double r, int n_max,
                const DiskOptions& opt)
{
    if (samples.empty()) throw DomainError("chi_u: no sample points");
    ChiReport rep;
    rep.r = r;
    rep.n_max = n_max;
    rep.value = rep.value_half = -std::numeric_limits<double>::infinity();
    for (const auto& x : samples) {
        GrowthSeries a = iterate_unstable_disk(f, S, x, r, n_max, opt);
        GrowthSeries b = iterate_unstable_disk(f, S, x, 0.5 * r, n_max, opt);
        rep.slopes.push_back(a.slope);
        rep.slopes_half.push_back(b.slope);
        rep.value = std::max(rep.value, a.slope);
        rep.value_half = std::max(rep.value_half, b.slope);
        rep.budget_exceeded = rep.budget_exceeded || a.budget_exceeded || b.budget_exceeded;
    }
    rep.spread = std::abs(rep.value - rep.value_half);
    return rep;
}

nlohmann::json ChiReport::to_json() const
{
    return {{"chi_u", value},   {"chi_u_half_r", value_half}, {"spread", spread},
            {"r", r},           {"n_max", n_max},             {"slopes", slopes},
            {"slopes_half_r", slopes_half}, {"budget_exceeded", budget_exceeded}};
}

// ---------------------------------------------------------------------------
// separated sets

BowenEstimate bowen_entropy(const MapSpec& f, int n, const std::vector<double>& epsilon_list, int sample_budget,
                            const BowenOptions& opt)
{
    if (n < 2) throw DomainError("bowen_entropy: n must be at least 2");
    if (epsilon_list.empty()) throw DomainError("bowen_entropy: empty epsilon list");
    for (double e : epsilon_list)
        if (!(e > 0.0 && e < 0.25)) throw DomainError("bowen_entropy: epsilon must lie in (0, 1/4)");
    if (sample_budget < 16) throw DomainError("bowen_entropy: sample budget too small");
    const int d = f.dim();
    const Chart& chart = f.chart();

    BowenEstimate est;
    est.full_cloud = 1;
    for (int i = 0; i < d; ++i) est.full_cloud *= 128;
    const std::size_t M = std::min<std::size_t>(est.full_cloud, static_cast<std::size_t>(sample_budget));
    est.cloud = M;
    const double eps_min = *std::min_element(epsilon_list.begin(), epsilon_list.end());
    if (opt.extent.empty()) {
        double box = opt.box > 0.0 ? opt.box : 0.5 * eps_min;
        if (box >= 0.5) throw DomainError("bowen_entropy: sampling box must be smaller than 1/2");
        est.extent.assign(d, box);
    } else {
        if (static_cast<int>(opt.extent.size()) != d) throw DomainError("bowen_entropy: extent dimension mismatch");
        for (double e : opt.extent)
            if (!(e > 0.0 && e <= 1.0)) throw DomainError("bowen_entropy: extents must lie in (0, 1]");
        est.extent = opt.extent;
    }

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    TorusPoint c;
    if (opt.center) {
        c = *opt.center;
    } else {
        Vec z(d);
        for (int i = 0; i < d; ++i) z[i] = u(rng) + 0.5;
        c = TorusPoint(z);
    }
    std::vector<TorusPoint> orbit(static_cast<std::size_t>(n) * M);
    for (std::size_t i = 0; i < M; ++i) {
        Vec o(d);
        for (int j = 0; j < d; ++j) o[j] = est.extent[j] * u(rng);
        orbit[i] = chart.advance(c, o);
    }
    for (int k = 1; k < n; ++k)
        for (std::size_t i = 0; i < M; ++i)
            orbit[static_cast<std::size_t>(k) * M + i] = f.forward(orbit[static_cast<std::size_t>(k - 1) * M + i]);

    const std::size_t cap = static_cast<std::size_t>(opt.saturation * static_cast<double>(M));
    double sxy = 0.0, sxx = 0.0;
    int dof = 0;
    for (double eps : epsilon_list) {
        std::vector<std::pair<double, double>> pts;
        for (int m = 1; m <= n; ++m) {
            BowenCount bc;
            bc.n = m;
            bc.epsilon = eps;
            bc.count = greedy_separated(orbit, M, m, eps, chart, 2 * cap);
            bc.fitted = bc.count >= static_cast<std::size_t>(opt.min_count) && bc.count <= cap;
            if (bc.fitted) pts.emplace_back(m, std::log(static_cast<double>(bc.count)));
            if (m == n && eps == eps_min) est.raw = std::log(static_cast<double>(bc.count)) / n;
            est.counts.push_back(bc);
        }
        if (pts.size() < 2) continue;
        double mx = 0, my = 0;
        for (auto& p : pts) {
            mx += p.first;
            my += p.second;
        }
        mx /= pts.size();
        my /= pts.size();
        for (auto& p : pts) {
            sxy += (p.first - mx) * (p.second - my);
            sxx += (p.first - mx) * (p.first - mx);
        }
        dof += static_cast<int>(pts.size()) - 1;
        est.fitted_points += static_cast<int>(pts.size());
    }
    est.value = sxx > 0.0 ? sxy / sxx : 0.0;
    if (dof < 2) {
        est.flagged = true;
        est.note = "too few unsaturated counts for a slope fit; raise the sample budget";
    }
    if (M < est.full_cloud) {
        std::string s = "cloud capped at the sample budget (" + std::to_string(M) + " of " +
                        std::to_string(est.full_cloud) + " points)";
        est.note = est.note.empty() ? s : est.note + "; " + s;
    }
    return est;
}

nlohmann::json BowenEstimate::to_json() const
{
    nlohmann::json c = nlohmann::json::array();
    for (const auto& b : counts) c.push_back({{"n", b.n}, {"epsilon", b.epsilon}, {"count", b.count}, {"fitted", b.fitted}});
    return {{"entropy", value}, {"raw", raw},       {"cloud", cloud},     {"full_cloud", full_cloud}, {"extent", extent},
            {"counts", c},      {"fitted_points", fitted_points}, {"flagged", flagged}, {"note", note}};
}

// ---------------------------------------------------------------------------
// brackets

ThomasBracket thomas_bracket(double h_f, double tau_min, double tau_max)
{
    if (!std::isfinite(h_f) || !std::isfinite(tau_min) || !std::isfinite(tau_max))
        throw DomainError("thomas_bracket: non-finite input");
    if (tau_min > tau_max) throw DomainError("thomas_bracket: tau_min exceeds tau_max");
    if (!(1.0 + tau_min > 0.0)) throw DomainError("thomas_bracket: 1 + min tau must be positive");
    ThomasBracket b;
    b.low = (1.0 + tau_min) * (1.0 + tau_min) * h_f;
    b.high = (1.0 + tau_max) * (1.0 + tau_max) * h_f;
    b.low_single = (1.0 + tau_min) * h_f;
    b.high_single = (1.0 + tau_max) * h_f;
    return b;
}

ThomasBracket thomas_bracket(double h_f, const Section& tau_tilde)
{
    if (tau_tilde.components() != 1) throw DomainError("thomas_bracket: tau must be a scalar grid function");
    const auto& v = tau_tilde.raw();
    if (v.empty()) throw DomainError("thomas_bracket: empty grid function");
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return thomas_bracket(h_f, *lo, *hi);
}

nlohmann::json ThomasBracket::to_json() const
{
    return {{"low", low}, {"high", high}, {"low_single", low_single}, {"high_single", high_single}};
}

// ---------------------------------------------------------------------------
// local constancy

namespace {

ConstancyEntry measure_entry(const std::string& name, const MapSpec& f, const Splitting& S,
                             const std::vector<TorusPoint>& samples, const ConstancyOptions& opt)
{
    ConstancyEntry e;
    e.name = name;
    e.chi = chi_u(f, S, samples, opt.r, opt.n_max, opt.disk);
    if (opt.bowen) {
        BowenOptions bo;
        bo.seed = opt.seed;
        e.bowen = bowen_entropy(f, opt.bowen_n, opt.epsilons, opt.bowen_budget, bo);
    }
    return e;
}

nlohmann::json entry_json(const ConstancyEntry& e)
{
    nlohmann::json j = {{"name", e.name}, {"chi", e.chi.to_json()}, {"chi_deviation", e.chi_deviation}};
    if (e.bowen) {
        j["bowen"] = e.bowen->to_json();
        j["bowen_deviation"] = e.bowen_deviation;
    }
    return j;
}

} // namespace

ConstancyReport entropy_local_constancy_experiment(const MapSpec& f, const Splitting& S,
                                                   const std::vector<Perturbation>& perturbations,
                                                   const ConstancyOptions& opt)
{
    auto samples = random_points(f.dim(), opt.samples, opt.seed);
    ConstancyReport rep;
    rep.base = measure_entry("f", f, S, samples, opt);
    for (const auto& p : perturbations) {
        if (p.g.dim() != f.dim()) throw DomainError("entropy_local_constancy_experiment: dimension mismatch");
        ConstancyEntry e = measure_entry(p.name, p.g, p.S, samples, opt);
        e.chi_deviation = std::abs(e.chi.value - rep.base.chi.value);
        if (e.bowen && rep.base.bowen) e.bowen_deviation = std::abs(e.bowen->value - rep.base.bowen->value);
        rep.max_chi_deviation = std::max(rep.max_chi_deviation, e.chi_deviation);
        rep.max_bowen_deviation = std::max(rep.max_bowen_deviation, e.bowen_deviation);
        rep.perturbed.push_back(std::move(e));
    }
    return rep;
}

nlohmann::json ConstancyReport::to_json() const
{
    nlohmann::json p = nlohmann::json::array();
    for (const auto& e : perturbed) p.push_back(entry_json(e));
    return {{"base", entry_json(base)},
            {"perturbed", p},
            {"max_chi_deviation", max_chi_deviation},
            {"max_bowen_deviation", max_bowen_deviation}};
}

} // namespace qc
