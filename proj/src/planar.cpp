#include "leglab/planar.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace leglab {

namespace {

using cplx = std::complex<double>;

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    return a.x() * b.y() - a.y() * b.x();
}

Eigen::VectorXd closed_params(const Eigen::VectorXd& x)
{
    Eigen::VectorXd xc(x.size() + 1);
    xc << x, x[0] + 1.0;
    return xc;
}

// Cubic Hermite piece between samples i and i + 1 (wrapping), evaluated at u in [0, 1].
struct Piece {
    Eigen::Vector2d p0, p1, m0, m1;  // tangents scaled by the interval length

    Eigen::Vector2d at(double u) const
    {
        const double u2 = u * u, u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * p1 +
               (u3 - u2) * m1;
    }
    Eigen::Vector2d d(double u) const
    {
        const double u2 = u * u;
        return (6 * u2 - 6 * u) * p0 + (3 * u2 - 4 * u + 1) * m0 + (-6 * u2 + 6 * u) * p1 +
               (3 * u2 - 2 * u) * m1;
    }
    // Integral of (x dy - y dx) / 2 along the piece; Gauss-Legendre 3 is exact here.
    double lambda() const
    {
        static const double g[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
        static const double w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
        double acc = 0.0;
        for (int k = 0; k < 3; ++k)
            acc += w[k] * 0.5 * cross(at(g[k]), d(g[k]));
        return acc;
    }
};

Piece piece(const ImmersedLoop& loop, const Points2& tan, Eigen::Index i)
{
    const Eigen::Index n = loop.size(), j = (i + 1) % n;
    const double h = (j == 0 ? loop.params[0] + 1.0 : loop.params[j]) - loop.params[i];
    return {loop.points.row(i).transpose(), loop.points.row(j).transpose(), h * tan.row(i).transpose(),
            h * tan.row(j).transpose()};
}

double param_at(const ImmersedLoop& loop, Eigen::Index i, double u)
{
    const Eigen::Index n = loop.size(), j = (i + 1) % n;
    const double b = j == 0 ? loop.params[0] + 1.0 : loop.params[j];
    double x = loop.params[i] + u * (b - loop.params[i]);
    return x - std::floor(x);
}

// Winding number of a closed polygon around p.
int winding_number(const Points2& P, const Eigen::Vector2d& p)
{
    const Eigen::Index n = P.rows();
    int w = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Vector2d a = P.row(i), b = P.row((i + 1) % n);
        if (a.y() <= p.y()) {
            if (b.y() > p.y() && cross(b - a, p - a) > 0)
                ++w;
        } else if (b.y() <= p.y() && cross(b - a, p - a) < 0) {
            --w;
        }
    }
    return w;
}

struct SegmentHit {
    Eigen::Index i = 0, j = 0;
    double u = 0.0, v = 0.0;
};

// Pairs of intersecting segments; segments are half open [a, b).
std::vector<SegmentHit> segment_hits(const Points2& A, bool closedA, const Points2& B, bool closedB,
                                     bool same)
{
    const Eigen::Index na = closedA ? A.rows() : A.rows() - 1;
    const Eigen::Index nb = closedB ? B.rows() : B.rows() - 1;
    std::vector<SegmentHit> hits;
    if (na < 1 || nb < 1)
        return hits;
    auto seg = [](const Points2& P, Eigen::Index i) {
        return std::pair<Eigen::Vector2d, Eigen::Vector2d>(P.row(i), P.row((i + 1) % P.rows()));
    };
    Eigen::Vector2d lo = A.colwise().minCoeff().cwiseMin(B.colwise().minCoeff());
    Eigen::Vector2d hi = A.colwise().maxCoeff().cwiseMax(B.colwise().maxCoeff());
    const Eigen::Index cells = std::max<Eigen::Index>(1, Eigen::Index(std::sqrt(double(na + nb))));
    const Eigen::Vector2d span = (hi - lo).cwiseMax(1e-300);
    auto cell = [&](const Eigen::Vector2d& p) {
        const Eigen::Vector2d q = ((p - lo).array() / span.array() * double(cells)).matrix();
        return std::pair<Eigen::Index, Eigen::Index>(std::clamp<Eigen::Index>(Eigen::Index(q.x()), 0, cells - 1),
                                                     std::clamp<Eigen::Index>(Eigen::Index(q.y()), 0, cells - 1));
    };
    std::vector<std::vector<Eigen::Index>> bucket(std::size_t(cells * cells));
    for (Eigen::Index j = 0; j < nb; ++j) {
        auto [a, b] = seg(B, j);
        auto [x0, y0] = cell(a.cwiseMin(b));
        auto [x1, y1] = cell(a.cwiseMax(b));
        for (Eigen::Index cx = x0; cx <= x1; ++cx)
            for (Eigen::Index cy = y0; cy <= y1; ++cy)
                bucket[std::size_t(cx * cells + cy)].push_back(j);
    }
    std::vector<Eigen::Index> cand;
    for (Eigen::Index i = 0; i < na; ++i) {
        auto [a, b] = seg(A, i);
        auto [x0, y0] = cell(a.cwiseMin(b));
        auto [x1, y1] = cell(a.cwiseMax(b));
        cand.clear();
        for (Eigen::Index cx = x0; cx <= x1; ++cx)
            for (Eigen::Index cy = y0; cy <= y1; ++cy) {
                const auto& bk = bucket[std::size_t(cx * cells + cy)];
                cand.insert(cand.end(), bk.begin(), bk.end());
            }
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        for (Eigen::Index j : cand) {
            if (same) {
                if (j <= i + 1)
                    continue;
                if (closedA && i == 0 && j == na - 1)
                    continue;
            }
            auto [c, d] = seg(B, j);
            const Eigen::Vector2d r = b - a, s = d - c, q = c - a;
            const double den = cross(r, s);
            if (den == 0.0)
                continue;
            const double u = cross(q, s) / den, v = cross(q, r) / den;
            // Slightly closed segments so crossings at shared samples are not lost; dedupe later.
            constexpr double slack = 1e-10;
            if (u >= -slack && u <= 1.0 + slack && v >= -slack && v <= 1.0 + slack)
                hits.push_back({i, j, std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)});
        }
    }
    std::sort(hits.begin(), hits.end(), [](const SegmentHit& x, const SegmentHit& y) {
        return x.i != y.i ? x.i < y.i : x.j < y.j;
    });
    return hits;
}

// Newton on the Hermite pieces starting from the segment intersection.
Crossing refine(const ImmersedLoop& A, const Points2& tA, const ImmersedLoop& B, const Points2& tB,
                const SegmentHit& h)
{
    Eigen::Index i = h.i, j = h.j;
    double u = h.u, v = h.v;
    const Eigen::Index na = A.size(), nb = B.size();
    for (int it = 0; it < 30; ++it) {
        const Piece pa = piece(A, tA, i), pb = piece(B, tB, j);
        const Eigen::Vector2d r = pa.at(u) - pb.at(v);
        if (r.norm() < 1e-15)
            break;
        Eigen::Matrix2d J;
        J.col(0) = pa.d(u);
        J.col(1) = -pb.d(v);
        const Eigen::Vector2d step = J.fullPivLu().solve(r);
        if (!step.allFinite())
            break;
        u -= step[0];
        v -= step[1];
        // Step into the neighbouring piece when the root moved across a sample.
        if (u < 0.0) { i = (i + na - 1) % na; u += 1.0; }
        else if (u >= 1.0) { i = (i + 1) % na; u -= 1.0; }
        if (v < 0.0) { j = (j + nb - 1) % nb; v += 1.0; }
        else if (v >= 1.0) { j = (j + 1) % nb; v -= 1.0; }
        if (u < 0.0 || u >= 1.0 || v < 0.0 || v >= 1.0) {
            i = h.i;
            j = h.j;
            u = h.u;
            v = h.v;
            break;
        }
        if (step.norm() < 1e-15)
            break;
    }
    const Piece pa = piece(A, tA, i), pb = piece(B, tB, j);
    Crossing c;
    c.xa = param_at(A, i, u);
    c.xb = param_at(B, j, v);
    c.point = pa.at(u);
    const Eigen::Vector2d da = pa.d(u), db = pb.d(v);
    const double sn = cross(da, db) / (da.norm() * db.norm());
    c.sign = sn > 0 ? 1 : (sn < 0 ? -1 : 0);
    c.transverse = std::abs(sn) > 1e-6;
    return c;
}

std::vector<Crossing> dedupe(std::vector<Crossing> v)
{
    std::vector<Crossing> out;
    auto close = [](double a, double b) { return std::abs((a - b) - std::round(a - b)) < 1e-9; };
    for (auto& c : v) {
        bool dup = false;
        for (const auto& o : out)
            if (close(o.xa, c.xa) && close(o.xb, c.xb)) {
                dup = true;
                break;
            }
        if (!dup)
            out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](const Crossing& a, const Crossing& b) {
        return a.xa != b.xa ? a.xa < b.xa : a.xb < b.xb;
    });
    return out;
}

}  // namespace

double signed_area(const ImmersedLoop& loop)
{
    loop.validate();
    const Eigen::Index n = loop.size();
    if (!loop.tangents) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            acc += 0.5 * cross(loop.points.row(i), loop.points.row((i + 1) % n));
        return acc;
    }
    const Points2& t = *loop.tangents;
    Eigen::VectorXd a(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) {
        const Eigen::Index k = i % n;
        a[i] = 0.5 * cross(loop.points.row(k), t.row(k));
    }
    return cumulative_integral(a, closed_params(loop.params))[n];
}

std::map<int, double> winding_areas(const ImmersedLoop& loop)
{
    loop.validate();
    const Points2& P = loop.points;
    const Eigen::Index n = P.rows();
    std::vector<double> ys(P.col(1).data(), P.col(1).data() + n);
    for (const auto& h : segment_hits(P, true, P, true, true)) {
        const Eigen::Vector2d a = P.row(h.i), b = P.row((h.i + 1) % n);
        ys.push_back(a.y() + h.u * (b.y() - a.y()));
    }
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

    const auto un = std::size_t(n);
    std::vector<double> ylo(un), yhi(un), ymid(un);
    std::vector<Eigen::Index> order(un);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double y0 = P(i, 1), y1 = P((i + 1) % n, 1);
        ylo[std::size_t(i)] = std::min(y0, y1);
        yhi[std::size_t(i)] = std::max(y0, y1);
        ymid[std::size_t(i)] = 0.5 * (y0 + y1);
    }
    std::iota(order.begin(), order.end(), Eigen::Index(0));
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return ylo[std::size_t(a)] < ylo[std::size_t(b)]; });

    // The winding pattern along each horizontal line is fixed inside a slab and the
    // interval lengths are linear in y, so the midpoint rule is exact. Along the way,
    // record the winding number to the left of each edge at its mid height.
    std::map<int, double> area;
    std::vector<int> kleft(std::size_t(n), 0);
    std::vector<char> have_left(std::size_t(n), 0);
    struct Hit {
        double x;
        int dir;
        Eigen::Index edge;
    };
    std::vector<Hit> hits;
    std::vector<Eigen::Index> active;
    std::size_t next = 0;
    for (std::size_t k = 0; k + 1 < ys.size(); ++k) {
        const double y = 0.5 * (ys[k] + ys[k + 1]), hgt = ys[k + 1] - ys[k];
        while (next < order.size() && ylo[std::size_t(order[next])] < y)
            active.push_back(order[next++]);
        std::erase_if(active, [&](Eigen::Index e) { return yhi[std::size_t(e)] <= y; });
        hits.clear();
        for (Eigen::Index i : active) {
            const Eigen::Vector2d a = P.row(i), b = P.row((i + 1) % n);
            if ((a.y() < y) == (b.y() < y))
                continue;
            const double x = a.x() + (y - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
            hits.push_back({x, b.y() < a.y() ? 1 : -1, i});
        }
        std::sort(hits.begin(), hits.end(), [](const Hit& p, const Hit& q) { return p.x < q.x; });
        int w = 0;
        for (std::size_t m = 0; m < hits.size(); ++m) {
            const Hit& hm = hits[m];
            const int before = w;
            w += hm.dir;
            const std::size_t e = std::size_t(hm.edge);
            if (!have_left[e] && ymid[e] >= ys[k] && ymid[e] <= ys[k + 1]) {
                // Upward edges have their left side at smaller x.
                kleft[e] = hm.dir < 0 ? before : w;
                have_left[e] = 1;
            }
            if (m + 1 < hits.size() && w != 0)
                area[w] += (hits[m + 1].x - hm.x) * hgt;
        }
    }
    if (loop.tangents) {
        // Move the sliver between each chord and its Hermite arc to the region it belongs to.
        const double scale = (P.colwise().maxCoeff() - P.colwise().minCoeff()).norm();
        for (Eigen::Index i = 0; i < n; ++i) {
            const Piece pc = piece(loop, *loop.tangents, i);
            const double delta = pc.lambda() - 0.5 * cross(pc.p0, pc.p1);
            if (delta == 0.0)
                continue;
            int kl = kleft[std::size_t(i)];
            if (!have_left[std::size_t(i)]) {
                const Eigen::Vector2d e = pc.p1 - pc.p0;
                const Eigen::Vector2d left = Eigen::Vector2d(-e.y(), e.x()).normalized();
                kl = winding_number(P, 0.5 * (pc.p0 + pc.p1) + 1e-9 * scale * left);
            }
            area[kl] += delta;
            area[kl - 1] -= delta;
        }
    }
    // Rounding leftovers from slabs that pinch at a crossing.
    const Eigen::Vector2d box = P.colwise().maxCoeff() - P.colwise().minCoeff();
    const double floor_area = 1e-13 * box.x() * box.y();
    for (auto it = area.begin(); it != area.end();)
        it = (it->first == 0 || std::abs(it->second) <= floor_area) ? area.erase(it) : std::next(it);
    return area;
}

double LegendrianLift::f_at(double x) const
{
    const Eigen::Index n = base.size();
    const double p0 = base.params[0];
    const double shift = std::floor(x - p0);
    const double y = x - shift;
    const Eigen::Index i = std::max<Eigen::Index>(
        0, Eigen::Index(std::upper_bound(base.params.data(), base.params.data() + n, y) - base.params.data()) - 1);
    const Eigen::Index j = (i + 1) % n;
    const double xb = j == 0 ? p0 + 1.0 : base.params[j];
    const double h = xb - base.params[i], u = (y - base.params[i]) / h;
    const Points2 tan = base.derivative();
    auto lam = [&](Eigen::Index k) { return 0.5 * cross(base.points.row(k), tan.row(k)); };
    const double f0 = f[i], f1 = j == 0 ? f[0] + area : f[j];
    const double u2 = u * u, u3 = u2 * u;
    const double val = (2 * u3 - 3 * u2 + 1) * f0 + (u3 - 2 * u2 + u) * h * lam(i) +
                       (-2 * u3 + 3 * u2) * f1 + (u3 - u2) * h * lam(j);
    return val + shift * area;
}

LegendrianLift legendrian_lift(const ImmersedLoop& loop, LiftTarget target, double tol)
{
    loop.validate();
    const Eigen::Index n = loop.size();
    const Points2 tan = loop.derivative();
    ImmersedLoop base = loop;
    base.tangents = tan;
    LegendrianLift out;
    out.target = target;
    out.f.resize(n);
    out.f[0] = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double inc = piece(base, tan, i).lambda();
        if (i + 1 < n)
            out.f[i + 1] = out.f[i] + inc;
        else
            out.area = out.f[i] + inc;
    }
    if (target == LiftTarget::Circle) {
        const double defect = std::abs(out.area - std::round(out.area));
        if (defect > tol) {
            std::ostringstream os;
            os << "legendrian_lift: signed area " << out.area
               << " is not an integer (defect " << defect << "), no circle-valued lift";
            throw LiftError(os.str(), defect);
        }
        out.degree = int(std::lround(out.area));
    }
    // Central difference of f against the Simpson mean of j*lambda over the same two
    // intervals, both taken across the period.
    auto lam = [&](Eigen::Index i) { return 0.5 * cross(loop.points.row(i), tan.row(i)); };
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index a = (i + n - 1) % n, b = (i + 1) % n;
        const double xa = loop.params[a] - (i == 0 ? 1.0 : 0.0), xb = loop.params[b] + (i + 1 == n ? 1.0 : 0.0);
        const double fa = out.f[a] - (i == 0 ? out.area : 0.0), fb = out.f[b] + (i + 1 == n ? out.area : 0.0);
        const double h0 = loop.params[i] - xa, h1 = xb - loop.params[i];
        const double mean = ((2 - h1 / h0) * lam(a) + (h0 + h1) * (h0 + h1) / (h0 * h1) * lam(i) + (2 - h0 / h1) * lam(b)) / 6;
        out.defect = std::max(out.defect, std::abs((fb - fa) / (h0 + h1) - mean));
    }
    out.base = std::move(base);
    return out;
}

std::vector<Crossing> crossings(const ImmersedLoop& loop)
{
    loop.validate();
    const Points2 tan = loop.derivative();
    std::vector<Crossing> out;
    for (const auto& h : segment_hits(loop.points, true, loop.points, true, true)) {
        Crossing c = refine(loop, tan, loop, tan, h);
        if (c.xa > c.xb) {
            std::swap(c.xa, c.xb);
            c.sign = -c.sign;
        }
        if (c.transverse && std::abs(c.xa - c.xb) > 1e-9)
            out.push_back(c);
    }
    return dedupe(std::move(out));
}

std::vector<Crossing> intersections(const ImmersedLoop& a, const ImmersedLoop& b)
{
    a.validate();
    b.validate();
    const Points2 ta = a.derivative(), tb = b.derivative();
    std::vector<Crossing> out;
    for (const auto& h : segment_hits(a.points, true, b.points, true, false))
        out.push_back(refine(a, ta, b, tb, h));
    return dedupe(std::move(out));
}

std::vector<Crossing> polyline_crossings(const Points2& pts)
{
    std::vector<Crossing> out;
    for (const auto& h : segment_hits(pts, false, pts, false, true)) {
        const Eigen::Vector2d a = pts.row(h.i), b = pts.row(h.i + 1);
        const Eigen::Vector2d c = pts.row(h.j), d = pts.row(h.j + 1);
        Crossing cr;
        cr.xa = double(h.i) + h.u;
        cr.xb = double(h.j) + h.v;
        cr.point = a + h.u * (b - a);
        const double sn = cross(b - a, d - c) / ((b - a).norm() * (d - c).norm());
        cr.sign = sn > 0 ? 1 : (sn < 0 ? -1 : 0);
        cr.transverse = std::abs(sn) > 1e-6;
        bool dup = false;
        for (const auto& o : out)
            dup = dup || (std::abs(o.xa - cr.xa) < 1e-9 && std::abs(o.xb - cr.xb) < 1e-9);
        if (!dup)
            out.push_back(cr);
    }
    return out;
}

std::vector<PlanarChord> chord_detect(const LegendrianLift& lift0, const LegendrianLift& lift1, double horizon)
{
    if (!(horizon > 0.0))
        throw ArgumentError("chord_detect: horizon must be positive");
    const bool circle = lift0.target == LiftTarget::Circle && lift1.target == LiftTarget::Circle;
    auto actions = [&](double a) {
        std::vector<double> out;
        if (!circle) {
            if (a > 0.0 && a <= horizon)
                out.push_back(a);
            return out;
        }
        double rep = a - std::floor(a);
        if (rep < 1e-12 || rep > 1.0 - 1e-12)
            rep = 1.0;
        for (double v = rep; v <= horizon + 1e-12; v += 1.0)
            out.push_back(v);
        return out;
    };
    std::vector<PlanarChord> out;
    const ImmersedLoop& A = lift0.base;
    const ImmersedLoop& B = lift1.base;
    const bool identical = A.size() == B.size() && (A.points - B.points).cwiseAbs().maxCoeff() <= 1e-14 &&
                           (A.params - B.params).cwiseAbs().maxCoeff() <= 1e-14;
    if (identical) {
        for (Eigen::Index i = 0; i < A.size(); ++i) {
            PlanarChord c;
            c.x0 = c.x1 = A.params[i];
            c.point = A.points.row(i);
            c.actions = actions(lift1.f[i] - lift0.f[i]);
            c.transverse = false;
            out.push_back(std::move(c));
        }
        for (const auto& cr : crossings(A))
            for (int flip = 0; flip < 2; ++flip) {
                PlanarChord c;
                c.x0 = flip ? cr.xb : cr.xa;
                c.x1 = flip ? cr.xa : cr.xb;
                c.point = cr.point;
                c.actions = actions(lift1.f_at(c.x1) - lift0.f_at(c.x0));
                c.transverse = cr.transverse;
                out.push_back(std::move(c));
            }
        return out;
    }
    for (const auto& cr : intersections(A, B)) {
        PlanarChord c;
        c.x0 = cr.xa;
        c.x1 = cr.xb;
        c.point = cr.point;
        c.actions = actions(lift1.f_at(c.x1) - lift0.f_at(c.x0));
        c.transverse = cr.transverse;
        out.push_back(std::move(c));
    }
    return out;
}

TbResult tb_difference(double epsilon, bool reverse_annulus)
{
    if (!(epsilon > 0.0) || !(epsilon < 0.5 * std::log(2.0)))
        throw ArgumentError("tb_difference: epsilon must lie in (0, ln(2)/2)");
    const double r1 = 1.0 / std::sqrt(M_PI), r2 = 1.0 / std::sqrt(2.0 * M_PI);
    const double e = std::exp(epsilon);
    const cplx I(0.0, 1.0);
    auto ph = [&](double k, double t) { return std::exp(2.0 * M_PI * k * t * I); };

    // Both lifts have j*lambda = dx, so f(x) = x and t = x on each of them.
    struct Side {
        int id;
        double radius;
        double turns;
    };
    const Side sides[2] = {{1, r1, 1.0}, {2, r2, 2.0}};

    TbResult res;
    res.epsilon = epsilon;
    for (const Side& sd : sides) {
        auto G = [&](double s, double x) {
            return (1.0 - s) * r2 * ph(2, x) + s * r1 * ph(1, x) - e * sd.radius * ph(sd.turns, x);
        };
        auto dGs = [&](double, double x) { return r1 * ph(1, x) - r2 * ph(2, x); };
        auto dGx = [&](double s, double x) {
            return (1.0 - s) * r2 * 4.0 * M_PI * I * ph(2, x) + s * r1 * 2.0 * M_PI * I * ph(1, x) -
                   e * sd.radius * 2.0 * M_PI * sd.turns * I * ph(sd.turns, x);
        };
        const int ns = 100, nx = 200;
        const double lip = 4.0 * M_PI * (r1 + r2) + 2.0 * (r1 + r2);
        std::vector<std::pair<double, double>> found;
        for (int a = 0; a < ns; ++a)
            for (int b = 0; b < nx; ++b) {
                const double s0 = (a + 0.5) / ns, x0 = (b + 0.5) / nx;
                if (std::abs(G(s0, x0)) > lip * (1.0 / ns + 1.0 / nx))
                    continue;
                double s = s0, x = x0;
                bool ok = false;
                for (int it = 0; it < 50; ++it) {
                    const cplx g = G(s, x), gs = dGs(s, x), gx = dGx(s, x);
                    Eigen::Matrix2d J;
                    J << gs.real(), gx.real(), gs.imag(), gx.imag();
                    const Eigen::Vector2d step = J.fullPivLu().solve(Eigen::Vector2d(g.real(), g.imag()));
                    if (!step.allFinite())
                        break;
                    s -= step[0];
                    x -= step[1];
                    if (std::abs(G(s, x)) < 1e-14) {
                        ok = true;
                        break;
                    }
                }
                if (!ok || s < -1e-12 || s > 1.0 + 1e-12)
                    continue;
                x -= std::floor(x);
                if (x > 1.0 - 1e-12)
                    x = 0.0;
                bool dup = false;
                for (auto [fs, fx] : found)
                    if (std::abs(fs - s) < 1e-9 && std::abs(std::remainder(fx - x, 1.0)) < 1e-9)
                        dup = true;
                if (!dup)
                    found.emplace_back(s, x);
            }
        for (auto [s, x] : found) {
            // Frame (T push-off, dF/ds, dF/dt) in (t, X, Y).
            const cplx jt = e * sd.radius * 2.0 * M_PI * sd.turns * I * ph(sd.turns, x);
            const cplx Fs = dGs(s, x);
            const cplx Ft = (1.0 - s) * r2 * 4.0 * M_PI * I * ph(2, x) + s * r1 * 2.0 * M_PI * I * ph(1, x);
            Eigen::Matrix3d M;
            M.col(0) << 1.0, jt.real(), jt.imag();
            M.col(1) << 0.0, Fs.real(), Fs.imag();
            M.col(2) << 1.0, Ft.real(), Ft.imag();
            // alpha ^ d alpha = -dt ^ dX ^ dY for alpha = dt - lambda.
            int sign = M.determinant() > 0 ? -1 : 1;
            if (reverse_annulus)
                sign = -sign;
            res.points.push_back({s, x, sign, sd.id});
            (sd.id == 1 ? res.count1 : res.count2) += sign;
        }
    }
    res.difference = res.count1 + res.count2;
    res.tb_lambda = res.tb_unknot + res.difference;
    res.contradicts_bennequin = res.tb_lambda > -1;
    return res;
}

namespace corpus {

namespace {

LoopFamily make_family(const TimeGrid& grid, Eigen::Index nx,
                       const std::function<void(double t, double x, Eigen::Vector2d& p, Eigen::Vector2d& px,
                                                Eigen::Vector2d& pt)>& fn)
{
    if (nx < 8)
        throw ArgumentError("corpus: need >= 8 samples");
    LoopFamily f;
    f.grid = grid;
    f.params = Eigen::VectorXd::LinSpaced(nx, 0.0, 1.0 - 1.0 / double(nx));
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        Points2 p(nx, 2), px(nx, 2), pt(nx, 2);
        for (Eigen::Index i = 0; i < nx; ++i) {
            Eigen::Vector2d a, b, c;
            fn(grid[k], f.params[i], a, b, c);
            p.row(i) = a;
            px.row(i) = b;
            pt.row(i) = c;
        }
        f.points.push_back(std::move(p));
        f.tangents.push_back(std::move(px));
        f.velocities.push_back(std::move(pt));
    }
    return f;
}

Eigen::Vector2d vec(cplx z)
{
    return {z.real(), z.imag()};
}

}  // namespace

LoopFamily rotating_circle(const TimeGrid& grid, Eigen::Index nx, double r, double offset, double turns)
{
    const cplx I(0.0, 1.0);
    return make_family(grid, nx, [=](double t, double x, Eigen::Vector2d& p, Eigen::Vector2d& px, Eigen::Vector2d& pt) {
        const cplx rot = std::exp(2.0 * M_PI * turns * t * I);
        const cplx z = rot * (offset + r * std::exp(2.0 * M_PI * x * I));
        p = vec(z);
        px = vec(rot * r * 2.0 * M_PI * I * std::exp(2.0 * M_PI * x * I));
        pt = vec(2.0 * M_PI * turns * I * z);
    });
}

LoopFamily translating_circle(const TimeGrid& grid, Eigen::Index nx, double r, Eigen::Vector2d velocity)
{
    return make_family(grid, nx, [=](double t, double x, Eigen::Vector2d& p, Eigen::Vector2d& px, Eigen::Vector2d& pt) {
        const double a = 2.0 * M_PI * x;
        p = t * velocity + r * Eigen::Vector2d(std::cos(a), std::sin(a));
        px = 2.0 * M_PI * r * Eigen::Vector2d(-std::sin(a), std::cos(a));
        pt = velocity;
    });
}

LoopFamily squeezed_circle(const TimeGrid& grid, Eigen::Index nx, double r, double rate)
{
    return make_family(grid, nx, [=](double t, double x, Eigen::Vector2d& p, Eigen::Vector2d& px, Eigen::Vector2d& pt) {
        const double a = 2.0 * M_PI * x, ex = std::exp(rate * t), ey = std::exp(-rate * t);
        p = Eigen::Vector2d(ex * r * std::cos(a), ey * r * std::sin(a));
        px = 2.0 * M_PI * r * Eigen::Vector2d(-ex * std::sin(a), ey * std::cos(a));
        pt = Eigen::Vector2d(rate * p.x(), -rate * p.y());
    });
}

LoopFamily wobbling_circle(const TimeGrid& grid, Eigen::Index nx, double r0, double eps, int k)
{
    if (2.0 * eps >= r0 * r0)
        throw ArgumentError("wobbling_circle: eps too large for r0");
    return make_family(grid, nx, [=](double t, double x, Eigen::Vector2d& p, Eigen::Vector2d& px, Eigen::Vector2d& pt) {
        const double phi = 2.0 * M_PI * x;
        const double r = std::sqrt(r0 * r0 + 2.0 * eps * t * std::sin(k * phi));
        const double rphi = eps * t * k * std::cos(k * phi) / r;
        const double rt = eps * std::sin(k * phi) / r;
        const Eigen::Vector2d e(std::cos(phi), std::sin(phi)), n(-std::sin(phi), std::cos(phi));
        p = r * e;
        px = 2.0 * M_PI * (rphi * e + r * n);
        pt = rt * e;
    });
}

ImmersedLoop circle(Eigen::Index nx, double area, Eigen::Vector2d center, int turns)
{
    if (nx < 8 || turns == 0)
        throw ArgumentError("circle: need >= 8 samples and nonzero turns");
    const double r = std::sqrt(std::abs(area) / M_PI);
    const double dir = area < 0 ? -1.0 : 1.0;
    ImmersedLoop loop;
    loop.params = Eigen::VectorXd::LinSpaced(nx, 0.0, 1.0 - 1.0 / double(nx));
    loop.points.resize(nx, 2);
    Points2 tan(nx, 2);
    for (Eigen::Index i = 0; i < nx; ++i) {
        const double w = 2.0 * M_PI * turns * dir, a = w * loop.params[i];
        loop.points.row(i) = center + r * Eigen::Vector2d(std::cos(a), std::sin(a));
        tan.row(i) = r * w * Eigen::Vector2d(-std::sin(a), std::cos(a));
    }
    loop.tangents = tan;
    return loop;
}

}  // namespace corpus

}  // namespace leglab
