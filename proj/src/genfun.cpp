#include "leglab/genfun.hpp"
#include "leglab/numerics.hpp"

#include <algorithm>
#include <memory>
#include <cmath>
#include <numeric>
#include <sstream>

namespace leglab {

namespace {

constexpr double kFiberH = 1e-6;   // first differences of closed forms
constexpr double kHessH = 1e-4;    // second differences
constexpr double kGradTol = 1e-8;
constexpr double kDegenerateTol = 1e-6;

double wrap_dx(double d)
{
    return d - std::round(d);
}

// Catmull-Rom weights for a sample at fractional offset u in [0, 1).
std::array<double, 4> cubic_weights(double u)
{
    const double u2 = u * u, u3 = u2 * u;
    return {0.5 * (-u3 + 2 * u2 - u), 0.5 * (3 * u3 - 5 * u2 + 2), 0.5 * (-3 * u3 + 4 * u2 + u),
            0.5 * (u3 - u2)};
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a)
    {
        while (parent[a] != a)
            a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

double Tail::operator()(const Eigen::Vector2d& eta, int dim) const
{
    if (kind == TailKind::Linear)
        return coeff[0] * eta[0] + (dim > 1 ? coeff[1] * eta[1] : 0.0);
    return coeff[0] * eta[0] * eta[0] + (dim > 1 ? coeff[1] * eta[1] * eta[1] : 0.0);
}

Eigen::Vector2d GeneratingFunctionFamily::fiber_point(Eigen::Index i1, Eigen::Index i2) const
{
    return {g_.fiber[0].at(i1), fiber_dim() > 1 ? g_.fiber[1].at(i2) : 0.0};
}

GeneratingFunctionFamily GeneratingFunctionFamily::from_function(FamilyGrid grid, FieldFn K,
                                                                 std::optional<FieldFn> dKdt,
                                                                 double tail_tol)
{
    GeneratingFunctionFamily f;
    f.g_ = std::move(grid);
    f.K_ = std::move(K);
    f.dKdt_ = std::move(dKdt);
    if (f.g_.fiber.empty() || f.g_.fiber.size() > 2)
        throw ArgumentError("GeneratingFunctionFamily: fiber dimension must be 1 or 2");
    const Eigen::Index nt = f.g_.time.size(), nx = f.g_.xs.size();
    const Eigen::Index n1 = f.n1(), n2 = f.n2();
    f.values_.assign(nt, Eigen::VectorXd(nx * n1 * n2));
    for (Eigen::Index t = 0; t < nt; ++t)
        for (Eigen::Index ix = 0; ix < nx; ++ix)
            for (Eigen::Index i1 = 0; i1 < n1; ++i1)
                for (Eigen::Index i2 = 0; i2 < n2; ++i2)
                    f.values_[t][f.flat(ix, i1, i2)] =
                        f.K_(f.g_.time[t], f.g_.xs[ix], f.fiber_point(i1, i2));
    f.check(tail_tol);
    return f;
}

GeneratingFunctionFamily GeneratingFunctionFamily::from_samples(FamilyGrid grid,
                                                                std::vector<Eigen::VectorXd> values,
                                                                double tail_tol)
{
    GeneratingFunctionFamily f;
    f.g_ = std::move(grid);
    f.values_ = std::move(values);
    if (f.g_.fiber.empty() || f.g_.fiber.size() > 2)
        throw ArgumentError("GeneratingFunctionFamily: fiber dimension must be 1 or 2");
    const Eigen::Index expect = f.g_.xs.size() * f.n1() * f.n2();
    if (static_cast<Eigen::Index>(f.values_.size()) != f.g_.time.size())
        throw ArgumentError("GeneratingFunctionFamily: one value array per time node expected");
    for (const auto& v : f.values_)
        if (v.size() != expect)
            throw ArgumentError("GeneratingFunctionFamily: value array has " +
                                std::to_string(v.size()) + " entries, expected " +
                                std::to_string(expect));
    f.check(tail_tol);
    return f;
}

void GeneratingFunctionFamily::check(double tail_tol)
{
    const int dim = fiber_dim();
    if (g_.xs.size() < 4)
        throw ArgumentError("GeneratingFunctionFamily: base grid needs >= 4 samples");
    for (const auto& ax : g_.fiber)
        if (ax.n < 4 || !(ax.hi > ax.lo))
            throw ArgumentError("GeneratingFunctionFamily: bad fiber axis");
    if (!(g_.R > 0.0))
        throw ArgumentError("GeneratingFunctionFamily: cap R must be positive");
    if (g_.tail.kind == TailKind::Linear && g_.tail.coeff.head(dim).norm() == 0.0)
        throw ArgumentError("GeneratingFunctionFamily: linear tail must be nonzero");
    if (g_.tail.kind == TailKind::Quadratic && (g_.tail.coeff.head(dim).array() == 0.0).any())
        throw ArgumentError("GeneratingFunctionFamily: quadratic tail must be nondegenerate");
    for (const auto& v : values_)
        if (!v.allFinite())
            throw ArgumentError("GeneratingFunctionFamily: non-finite sample");

    // K - tail must be constant in eta on the outer shell.
    const Eigen::Index nt = g_.time.size(), nx = g_.xs.size(), n1 = this->n1(), n2 = this->n2();
    tail_defect_ = 0.0;
    for (Eigen::Index t = 0; t < nt; ++t)
        for (Eigen::Index ix = 0; ix < nx; ++ix) {
            double lo = 1e300, hi = -1e300;
            auto visit = [&](Eigen::Index i1, Eigen::Index i2) {
                const double r = sample(t, ix, i1, i2) - g_.tail(fiber_point(i1, i2), dim);
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            };
            if (dim == 1) {
                visit(0, 0);
                visit(n1 - 1, 0);
            } else {
                for (Eigen::Index i = 0; i < n1; ++i) {
                    visit(i, 0);
                    visit(i, n2 - 1);
                }
                for (Eigen::Index j = 0; j < n2; ++j) {
                    visit(0, j);
                    visit(n1 - 1, j);
                }
            }
            tail_defect_ = std::max(tail_defect_, hi - lo);
        }
    if (tail_defect_ > tail_tol) {
        std::ostringstream os;
        os << "GeneratingFunctionFamily: values leave the declared tail on the outer shell (defect "
           << tail_defect_ << ")";
        throw ArgumentError(os.str());
    }
}

double GeneratingFunctionFamily::interpolate(Eigen::Index t, double x, const Eigen::Vector2d& eta) const
{
    const Eigen::Index nx = g_.xs.size(), n1 = this->n1(), n2 = this->n2();
    // Base: uniform spacing assumed for the interpolant.
    const double x0 = g_.xs[0];
    const double hx = circle() ? 1.0 / double(nx) : (g_.xs[nx - 1] - x0) / double(nx - 1);
    double ux = (x - x0) / hx;
    if (circle())
        ux -= double(nx) * std::floor(ux / double(nx));
    const Eigen::Index bx = Eigen::Index(std::floor(ux));
    const auto wx = cubic_weights(ux - double(bx));

    auto axis = [](const FiberAxis& ax, double e, Eigen::Index& base) {
        double u = std::clamp((e - ax.lo) / ax.step(), 0.0, double(ax.n - 1));
        base = std::min<Eigen::Index>(Eigen::Index(std::floor(u)), ax.n - 2);
        return cubic_weights(u - double(base));
    };
    auto clampi = [](Eigen::Index i, Eigen::Index n) { return std::clamp<Eigen::Index>(i, 0, n - 1); };
    Eigen::Index b1 = 0, b2 = 0;
    const auto w1 = axis(g_.fiber[0], eta[0], b1);
    std::array<double, 4> w2{0, 1, 0, 0};
    if (fiber_dim() > 1)
        w2 = axis(g_.fiber[1], eta[1], b2);

    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
        Eigen::Index ix = bx - 1 + a;
        ix = circle() ? ((ix % nx) + nx) % nx : clampi(ix, nx);
        for (int b = 0; b < 4; ++b) {
            const Eigen::Index i1 = clampi(b1 - 1 + b, n1);
            for (int c = 0; c < (fiber_dim() > 1 ? 4 : 1); ++c) {
                const Eigen::Index i2 = fiber_dim() > 1 ? clampi(b2 - 1 + c, n2) : 0;
                const double w = wx[a] * w1[b] * (fiber_dim() > 1 ? w2[c] : 1.0);
                acc += w * sample(t, ix, i1, i2);
            }
        }
    }
    return acc;
}

double GeneratingFunctionFamily::eval(Eigen::Index t, double x, const Eigen::Vector2d& eta) const
{
    if (K_)
        return K_(g_.time[t], x, eta);
    return interpolate(t, x, eta);
}

double GeneratingFunctionFamily::eval_dt(Eigen::Index t, double x, const Eigen::Vector2d& eta) const
{
    const double tt = g_.time[t];
    if (dKdt_)
        return (*dKdt_)(tt, x, eta);
    if (K_)
        return (K_(tt + kFiberH, x, eta) - K_(tt - kFiberH, x, eta)) / (2 * kFiberH);
    const Eigen::Index nt = g_.time.size();
    if (nt < 3)
        throw ComputationError("eval_dt: need >= 3 time nodes for grid differences");
    const Eigen::Index i0 = std::clamp<Eigen::Index>(t - 1, 0, nt - 3);
    const double a = g_.time[i0], b = g_.time[i0 + 1], c = g_.time[i0 + 2];
    const double w0 = ((tt - b) + (tt - c)) / ((a - b) * (a - c));
    const double w1 = ((tt - a) + (tt - c)) / ((b - a) * (b - c));
    const double w2 = ((tt - a) + (tt - b)) / ((c - a) * (c - b));
    return w0 * interpolate(i0, x, eta) + w1 * interpolate(i0 + 1, x, eta) +
           w2 * interpolate(i0 + 2, x, eta);
}

namespace {

struct Local {
    const GeneratingFunctionFamily& K;
    Eigen::Index t;

    double f(double x, const Eigen::Vector2d& e) const { return K.eval(t, x, e); }

    Eigen::Vector2d grad_fiber(double x, const Eigen::Vector2d& e) const
    {
        Eigen::Vector2d g = Eigen::Vector2d::Zero();
        for (int k = 0; k < K.fiber_dim(); ++k) {
            Eigen::Vector2d a = e, b = e;
            a[k] += kFiberH;
            b[k] -= kFiberH;
            g[k] = (f(x, a) - f(x, b)) / (2 * kFiberH);
        }
        return g;
    }

    double dx(double x, const Eigen::Vector2d& e) const
    {
        return (f(x + kFiberH, e) - f(x - kFiberH, e)) / (2 * kFiberH);
    }

    // Hessian in (x, eta1, eta2) restricted to the first `dim` coordinates.
    Eigen::Matrix3d hessian(double x, const Eigen::Vector2d& e) const
    {
        const int dim = 1 + K.fiber_dim();
        auto at = [&](const Eigen::Vector3d& p) { return f(p[0], p.tail<2>()); };
        Eigen::Vector3d p0(x, e[0], e[1]);
        Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
        const double h = kHessH;
        const double f0 = at(p0);
        for (int i = 0; i < dim; ++i) {
            Eigen::Vector3d di = Eigen::Vector3d::Zero();
            di[i] = h;
            H(i, i) = (at(p0 + di) - 2 * f0 + at(p0 - di)) / (h * h);
            for (int j = i + 1; j < dim; ++j) {
                Eigen::Vector3d dj = Eigen::Vector3d::Zero();
                dj[j] = h;
                H(i, j) = H(j, i) =
                    (at(p0 + di + dj) - at(p0 + di - dj) - at(p0 - di + dj) + at(p0 - di - dj)) /
                    (4 * h * h);
            }
        }
        return H;
    }

    Eigen::Matrix2d hessian_fiber(double x, const Eigen::Vector2d& e) const
    {
        const Eigen::Matrix3d H = hessian(x, e);
        Eigen::Matrix2d F = H.bottomRightCorner<2, 2>();
        if (K.fiber_dim() == 1) {
            F(0, 1) = F(1, 0) = 0.0;
            F(1, 1) = 1.0;
        }
        return F;
    }

    // Newton in the fiber from a guess; returns false when it does not settle.
    bool solve_fiber(double x, Eigen::Vector2d& e, double max_move) const
    {
        const Eigen::Vector2d start = e;
        for (int it = 0; it < 40; ++it) {
            const Eigen::Vector2d g = grad_fiber(x, e);
            if (g.norm() < kGradTol * 1e-2)
                return true;
            const Eigen::Matrix2d H = hessian_fiber(x, e);
            Eigen::Vector2d step = H.fullPivLu().solve(g);
            if (!step.allFinite())
                return false;
            if (K.fiber_dim() == 1)
                step[1] = 0.0;
            e -= step;
            if ((e - start).norm() > max_move)
                return false;
            if (step.norm() < 1e-14)
                break;
        }
        return grad_fiber(x, e).norm() < kGradTol;
    }

    CriticalPoint make_point(double x, const Eigen::Vector2d& e, bool full) const
    {
        CriticalPoint c;
        c.t_index = t;
        c.t = K.time()[t];
        c.x = x;
        c.eta = e;
        c.value = f(x, e);
        c.dt_value = K.eval_dt(t, x, e);
        const Eigen::Vector2d gf = grad_fiber(x, e);
        c.grad_norm = full ? std::hypot(gf.norm(), dx(x, e)) : gf.norm();
        // Unused coordinates are padded with +1 so they add no negative directions.
        Eigen::Matrix3d H = hessian(x, e);
        if (!full) {
            H.row(0).setZero();
            H.col(0).setZero();
            H(0, 0) = 1.0;
        }
        if (K.fiber_dim() == 1) {
            H.row(2).setZero();
            H.col(2).setZero();
            H(2, 2) = 1.0;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
        const Eigen::Vector3d ev = es.eigenvalues();
        c.degenerate = ev.cwiseAbs().minCoeff() < kDegenerateTol;
        c.index = c.degenerate ? -1 : int((ev.array() < 0).count());
        return c;
    }
};

}  // namespace

std::vector<CriticalPoint> fiberwise_critical_set(const GeneratingFunctionFamily& K, Eigen::Index t)
{
    const Local L{K, t};
    const Eigen::Index nx = K.xs().size(), n1 = K.n1(), n2 = K.n2();
    const int dim = K.fiber_dim();
    std::vector<CriticalPoint> out;
    const double scale = 1.0 + K.values(t).cwiseAbs().maxCoeff();
    const double flat_tol = 1e-10 * scale;

    for (Eigen::Index ix = 0; ix < nx; ++ix) {
        const double x = K.xs()[ix];
        std::vector<CriticalPoint> found;
        auto add = [&](CriticalPoint c) {
            for (const auto& f : found)
                if ((f.eta - c.eta).norm() < 1e-7)
                    return;
            c.x_index = ix;
            found.push_back(std::move(c));
        };
        if (dim == 1) {
            const FiberAxis& ax = K.grid().fiber[0];
            Eigen::VectorXd g(n1);
            for (Eigen::Index i = 0; i < n1; ++i)
                g[i] = L.grad_fiber(x, K.fiber_point(i))[0];
            Eigen::Index i = 0;
            while (i + 1 < n1) {
                if (std::abs(g[i]) < flat_tol && std::abs(g[i + 1]) < flat_tol) {
                    Eigen::Index j = i + 1;
                    while (j + 1 < n1 && std::abs(g[j + 1]) < flat_tol)
                        ++j;
                    CriticalPoint c = L.make_point(x, K.fiber_point((i + j) / 2), false);
                    c.degenerate = true;
                    c.index = -1;
                    add(c);
                    i = j + 1;
                    continue;
                }
                if (g[i] == 0.0 || g[i] * g[i + 1] < 0.0) {
                    auto fn = [&](double e) { return L.grad_fiber(x, {e, 0.0})[0]; };
                    const double e = num::bracketed_root(fn, ax.at(i), ax.at(i + 1), g[i], g[i + 1]);
                    add(L.make_point(x, {e, 0.0}, false));
                }
                ++i;
            }
            if (g[n1 - 1] == 0.0)
                add(L.make_point(x, K.fiber_point(n1 - 1), false));
        } else {
            Eigen::MatrixXd g1(n1, n2), g2(n1, n2);
            for (Eigen::Index i = 0; i < n1; ++i)
                for (Eigen::Index j = 0; j < n2; ++j) {
                    const Eigen::Vector2d gr = L.grad_fiber(x, K.fiber_point(i, j));
                    g1(i, j) = gr[0];
                    g2(i, j) = gr[1];
                }
            const double cell = std::max(K.grid().fiber[0].step(), K.grid().fiber[1].step());
            for (Eigen::Index i = 0; i + 1 < n1; ++i)
                for (Eigen::Index j = 0; j + 1 < n2; ++j) {
                    const auto b1 = g1.block<2, 2>(i, j), b2 = g2.block<2, 2>(i, j);
                    if (b1.minCoeff() > 0 || b1.maxCoeff() < 0 || b2.minCoeff() > 0 ||
                        b2.maxCoeff() < 0)
                        continue;
                    const Eigen::Vector2d lo = K.fiber_point(i, j), hi = K.fiber_point(i + 1, j + 1);
                    if (b1.cwiseAbs().maxCoeff() < flat_tol && b2.cwiseAbs().maxCoeff() < flat_tol) {
                        CriticalPoint c = L.make_point(x, 0.5 * (lo + hi), false);
                        c.degenerate = true;
                        c.index = -1;
                        add(c);
                        continue;
                    }
                    Eigen::Vector2d e = 0.5 * (lo + hi);
                    if (!L.solve_fiber(x, e, 2 * cell))
                        continue;
                    if ((e.array() < lo.array() - 1e-9).any() || (e.array() > hi.array() + 1e-9).any())
                        continue;
                    add(L.make_point(x, e, false));
                }
        }
        std::sort(found.begin(), found.end(),
                  [](const CriticalPoint& a, const CriticalPoint& b) {
                      return a.eta[0] != b.eta[0] ? a.eta[0] < b.eta[0] : a.eta[1] < b.eta[1];
                  });
        out.insert(out.end(), found.begin(), found.end());
    }
    return out;
}

std::vector<JetPoint> generated_legendrian(const GeneratingFunctionFamily& K, Eigen::Index t,
                                           const std::vector<CriticalPoint>& crit)
{
    const Local L{K, t};
    std::vector<JetPoint> out;
    out.reserve(crit.size());
    for (const auto& c : crit)
        out.push_back(make_jet_point(c.x, L.dx(c.x, c.eta), c.value, K.grid().base));
    return out;
}

std::vector<JetPoint> generated_legendrian(const GeneratingFunctionFamily& K, Eigen::Index t)
{
    return generated_legendrian(K, t, fiberwise_critical_set(K, t));
}

namespace {

// Fiber critical points grouped by base sample, plus links between neighbouring samples.
struct Branches {
    std::vector<std::vector<CriticalPoint>> at;         // per base sample
    std::vector<std::vector<std::pair<int, int>>> link;  // per base interval ix -> ix+1
    std::vector<std::vector<int>> component;             // per sample, per point
    int num_components = 0;
};

Branches build_branches(const GeneratingFunctionFamily& K, Eigen::Index t)
{
    const Eigen::Index nx = K.xs().size();
    Branches b;
    b.at.assign(nx, {});
    for (auto& c : fiberwise_critical_set(K, t))
        if (!c.degenerate)
            b.at[c.x_index].push_back(c);
    double cell = K.grid().fiber[0].step();
    if (K.fiber_dim() > 1)
        cell = std::max(cell, K.grid().fiber[1].step());
    const double thr = 3.0 * cell;

    const Eigen::Index nlinks = K.circle() ? nx : nx - 1;
    b.link.assign(nx, {});
    std::vector<int> offset(nx + 1, 0);
    for (Eigen::Index i = 0; i < nx; ++i)
        offset[i + 1] = offset[i] + int(b.at[i].size());
    UnionFind uf(offset[nx]);
    for (Eigen::Index i = 0; i < nlinks; ++i) {
        const Eigen::Index j = (i + 1) % nx;
        std::vector<std::tuple<double, int, int>> cand;
        for (int a = 0; a < int(b.at[i].size()); ++a)
            for (int c = 0; c < int(b.at[j].size()); ++c) {
                const double d = (b.at[i][a].eta - b.at[j][c].eta).norm();
                if (d < thr)
                    cand.emplace_back(d, a, c);
            }
        std::sort(cand.begin(), cand.end());
        std::vector<bool> ua(b.at[i].size()), uc(b.at[j].size());
        for (auto [d, a, c] : cand) {
            if (ua[a] || uc[c])
                continue;
            ua[a] = uc[c] = true;
            b.link[i].emplace_back(a, c);
            uf.unite(offset[i] + a, offset[j] + c);
        }
    }
    // Fold points: unmatched ends close to each other on the same sample join one component.
    for (Eigen::Index i = 0; i < nx; ++i)
        for (int a = 0; a < int(b.at[i].size()); ++a)
            for (int c = a + 1; c < int(b.at[i].size()); ++c)
                if ((b.at[i][a].eta - b.at[i][c].eta).norm() < thr)
                    uf.unite(offset[i] + a, offset[i] + c);
    std::vector<int> label(offset[nx], -1);
    b.component.assign(nx, {});
    for (Eigen::Index i = 0; i < nx; ++i)
        for (int a = 0; a < int(b.at[i].size()); ++a) {
            const int r = uf.find(offset[i] + a);
            if (label[r] < 0)
                label[r] = b.num_components++;
            b.component[i].push_back(label[r]);
        }
    return b;
}

double next_x(const GeneratingFunctionFamily& K, Eigen::Index i)
{
    const Eigen::Index nx = K.xs().size();
    return i + 1 < nx ? K.xs()[i + 1] : K.xs()[0] + 1.0;
}

// Follows a fiber critical point from (xa, ea) towards (xb, eb).
Eigen::Vector2d follow(const Local& L, double x, double xa, double xb, const Eigen::Vector2d& ea,
                       const Eigen::Vector2d& eb, double cell)
{
    const double s = (x - xa) / (xb - xa);
    Eigen::Vector2d e = (1 - s) * ea + s * eb;
    L.solve_fiber(x, e, 3 * cell);
    return e;
}

}  // namespace

std::vector<CriticalPoint> critical_points(const GeneratingFunctionFamily& K, Eigen::Index t)
{
    const Local L{K, t};
    const Branches b = build_branches(K, t);
    const Eigen::Index nx = K.xs().size();
    const double cell = K.grid().fiber[0].step();
    std::vector<CriticalPoint> out;
    auto add = [&](double x, const Eigen::Vector2d& e) {
        if (K.circle())
            x -= std::floor(x);
        for (const auto& c : out)
            if (std::abs(wrap_dx(c.x - x)) < 1e-7 && (c.eta - e).norm() < 1e-6)
                return;
        out.push_back(L.make_point(x, e, true));
    };
    for (Eigen::Index i = 0; i < nx; ++i) {
        const Eigen::Index j = (i + 1) % nx;
        const double xa = K.xs()[i], xb = next_x(K, i);
        for (auto [a, c] : b.link[i]) {
            const Eigen::Vector2d ea = b.at[i][a].eta, eb = b.at[j][c].eta;
            const double da = L.dx(xa, ea), db = L.dx(xb, eb);
            if (da == 0.0)
                add(xa, ea);
            if (da * db < 0.0) {
                auto fn = [&](double x) { return L.dx(x, follow(L, x, xa, xb, ea, eb, cell)); };
                const double x = num::bracketed_root(fn, xa, xb, da, db);
                add(x, follow(L, x, xa, xb, ea, eb, cell));
            }
        }
    }
    std::sort(out.begin(), out.end(),
              [](const CriticalPoint& a, const CriticalPoint& b) { return a.value < b.value; });
    return out;
}

DifferenceResult difference_chords(const GeneratingFunctionFamily& F1,
                                   const GeneratingFunctionFamily& F2, Eigen::Index t)
{
    const Eigen::Index nx = F1.xs().size();
    if (F2.xs().size() != nx || (F1.xs() - F2.xs()).cwiseAbs().maxCoeff() > 1e-12 ||
        F1.circle() != F2.circle())
        throw ArgumentError("difference_chords: the two families must share the base grid");
    const Local L1{F1, t}, L2{F2, t};
    const Branches b1 = build_branches(F1, t), b2 = build_branches(F2, t);
    const double cell1 = F1.grid().fiber[0].step(), cell2 = F2.grid().fiber[0].step();

    // Node pairs where the base derivatives agree.
    std::vector<std::vector<double>> d(nx), delta(nx);
    std::vector<int> offset(nx + 1, 0);
    double pscale = 1.0;
    for (Eigen::Index i = 0; i < nx; ++i) {
        const double x = F1.xs()[i];
        const int n1 = int(b1.at[i].size()), n2 = int(b2.at[i].size());
        offset[i + 1] = offset[i] + n1 * n2;
        for (int a = 0; a < n1; ++a)
            for (int c = 0; c < n2; ++c) {
                const double p1 = L1.dx(x, b1.at[i][a].eta), p2 = L2.dx(x, b2.at[i][c].eta);
                pscale = std::max({pscale, std::abs(p1), std::abs(p2)});
                d[i].push_back(p1 - p2);
                delta[i].push_back(b1.at[i][a].value - b2.at[i][c].value);
            }
    }
    const double mb_tol = 1e-9 * pscale;
    UnionFind uf(offset[nx]);
    std::vector<char> flat(offset[nx], 0);
    for (Eigen::Index i = 0; i < nx; ++i)
        for (std::size_t k = 0; k < d[i].size(); ++k)
            flat[offset[i] + k] = std::abs(d[i][k]) <= mb_tol;
    const Eigen::Index nlinks = F1.circle() ? nx : nx - 1;
    for (Eigen::Index i = 0; i < nlinks; ++i) {
        const Eigen::Index j = (i + 1) % nx;
        const int m2i = int(b2.at[i].size()), m2j = int(b2.at[j].size());
        for (auto [a, a2] : b1.link[i])
            for (auto [c, c2] : b2.link[i]) {
                const int p = offset[i] + a * m2i + c, q = offset[j] + a2 * m2j + c2;
                if (flat[p] && flat[q])
                    uf.unite(p, q);
            }
    }
    DifferenceResult res;
    std::vector<char> in_mb(offset[nx], 0);
    {
        std::vector<std::vector<int>> members(offset[nx]);
        for (int p = 0; p < offset[nx]; ++p)
            if (flat[p])
                members[uf.find(p)].push_back(p);
        auto value_of = [&](int p) {
            const auto it = std::upper_bound(offset.begin(), offset.end(), p) - 1;
            const Eigen::Index i = it - offset.begin();
            return delta[i][p - *it];
        };
        for (const auto& m : members) {
            if (m.size() < 3)
                continue;
            double lo = 1e300, hi = -1e300;
            for (int p : m) {
                lo = std::min(lo, value_of(p));
                hi = std::max(hi, value_of(p));
            }
            if (hi - lo > 1e-8 * (1.0 + std::abs(hi)))
                continue;
            for (int p : m)
                in_mb[p] = 1;
            const double v = 0.5 * (lo + hi);
            auto it = std::find_if(res.morse_bott.begin(), res.morse_bott.end(),
                                   [&](const MorseBottComponent& c) { return std::abs(c.value - v) < 1e-8; });
            if (it == res.morse_bott.end()) {
                res.morse_bott.push_back({v, 0, 0});
                it = res.morse_bott.end() - 1;
            }
            it->pieces += 1;
            it->samples += Eigen::Index(m.size());
        }
    }

    auto add = [&](double x, const Eigen::Vector2d& e1, const Eigen::Vector2d& e2, int s, int tg) {
        if (F1.circle())
            x -= std::floor(x);
        for (const auto& c : res.chords)
            if (std::abs(wrap_dx(c.x - x)) < 1e-7 && (c.eta1 - e1).norm() < 1e-6 &&
                (c.eta2 - e2).norm() < 1e-6)
                return;
        ChordRecord r;
        r.x = x;
        r.eta1 = e1;
        r.eta2 = e2;
        r.source = s;
        r.target = tg;
        r.action = L1.f(x, e1) - L2.f(x, e2);
        r.sign = r.action > 1e-12 ? 1 : (r.action < -1e-12 ? -1 : 0);
        res.chords.push_back(r);
    };
    for (Eigen::Index i = 0; i < nlinks; ++i) {
        const Eigen::Index j = (i + 1) % nx;
        const double xa = F1.xs()[i], xb = next_x(F1, i);
        const int m2i = int(b2.at[i].size()), m2j = int(b2.at[j].size());
        for (auto [a, a2] : b1.link[i])
            for (auto [c, c2] : b2.link[i]) {
                const int p = offset[i] + a * m2i + c, q = offset[j] + a2 * m2j + c2;
                if (in_mb[p] && in_mb[q])
                    continue;
                const double da = d[i][a * m2i + c], db = d[j][a2 * m2j + c2];
                const Eigen::Vector2d e1a = b1.at[i][a].eta, e1b = b1.at[j][a2].eta;
                const Eigen::Vector2d e2a = b2.at[i][c].eta, e2b = b2.at[j][c2].eta;
                const int s = b1.component[i][a], tg = b2.component[i][c];
                if (std::abs(da) <= 1e-13 * pscale && !in_mb[p])
                    add(xa, e1a, e2a, s, tg);
                if (da * db < 0.0 && std::abs(da) > 1e-13 * pscale) {
                    auto fn = [&](double x) {
                        return L1.dx(x, follow(L1, x, xa, xb, e1a, e1b, cell1)) -
                               L2.dx(x, follow(L2, x, xa, xb, e2a, e2b, cell2));
                    };
                    const double x = num::bracketed_root(fn, xa, xb, da, db);
                    add(x, follow(L1, x, xa, xb, e1a, e1b, cell1), follow(L2, x, xa, xb, e2a, e2b, cell2),
                        s, tg);
                }
            }
    }
    std::sort(res.chords.begin(), res.chords.end(),
              [](const ChordRecord& a, const ChordRecord& b) { return a.x < b.x; });
    return res;
}

double difference_value(const GeneratingFunctionFamily& F1, const GeneratingFunctionFamily& F2,
                        Eigen::Index t, const ChordRecord& c)
{
    return F1.eval(t, c.x, c.eta1) - F2.eval(t, c.x, c.eta2);
}

HamiltonianTrace critical_value_trace(const GeneratingFunctionFamily& K)
{
    const TimeGrid& g = K.time();
    Eigen::MatrixXd h(g.size(), 2);
    for (Eigen::Index t = 0; t < g.size(); ++t) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& c : fiberwise_critical_set(K, t)) {
            if (c.degenerate)
                continue;
            lo = std::min(lo, c.dt_value);
            hi = std::max(hi, c.dt_value);
        }
        if (!(lo <= hi))
            lo = hi = 0.0;  // empty Legendrian: nothing to move
        h(t, 0) = lo;
        h(t, 1) = hi;
    }
    return HamiltonianTrace(g, std::move(h));
}

BoundReport derivative_bound_report(const GeneratingFunctionFamily& K, const HamiltonianTrace& trace,
                                    double tol)
{
    const TimeGrid& g = K.time();
    if (trace.grid().size() != g.size() ||
        (trace.grid().nodes() - g.nodes()).cwiseAbs().maxCoeff() > 1e-12)
        throw ArgumentError("derivative_bound_report: time grids differ");
    BoundReport r;
    r.margin = Eigen::VectorXd::Constant(g.size(), std::numeric_limits<double>::infinity());
    r.worst = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < g.size(); ++t) {
        for (const auto& c : fiberwise_critical_set(K, t)) {
            if (c.degenerate)
                continue;
            const double m = std::min(c.dt_value - trace.min()[t], trace.max()[t] - c.dt_value);
            r.margin[t] = std::min(r.margin[t], m);
        }
        if (r.margin[t] < r.worst) {
            r.worst = r.margin[t];
            r.worst_t = t;
        }
    }
    r.pass = r.worst >= -tol;
    return r;
}

SingularDiagram cerf_diagram(const GeneratingFunctionFamily& K, const HamiltonianTrace* trace, double tol)
{
    const TimeGrid& g = K.time();
    if (trace && trace->grid().size() != g.size())
        throw ArgumentError("cerf_diagram: trace time grid differs");
    double cell = std::max(K.grid().fiber[0].step(), K.circle() ? 1.0 / double(K.xs().size())
                                                                 : K.xs()[1] - K.xs()[0]);
    if (K.fiber_dim() > 1)
        cell = std::max(cell, K.grid().fiber[1].step());
    const double thr = 10.0 * cell;

    SingularDiagram dia;
    std::vector<int> live;  // branch id per point of the previous slice
    std::vector<CriticalPoint> prev;
    auto dist = [&](const CriticalPoint& a, const CriticalPoint& b) {
        const double dx = K.circle() ? wrap_dx(a.x - b.x) : a.x - b.x;
        return std::sqrt(dx * dx + (a.eta - b.eta).squaredNorm());
    };
    for (Eigen::Index t = 0; t < g.size(); ++t) {
        std::vector<CriticalPoint> cur = critical_points(K, t);
        if (trace)
            for (const auto& c : cur) {
                const double over = std::max(c.dt_value - trace->max()[t], trace->min()[t] - c.dt_value);
                dia.band_violation = std::max(dia.band_violation, over);
            }
        std::vector<int> ids(cur.size(), -1);
        std::vector<std::tuple<double, int, int>> cand;
        for (int a = 0; a < int(prev.size()); ++a)
            for (int c = 0; c < int(cur.size()); ++c) {
                const double d = dist(prev[a], cur[c]);
                const bool same_index =
                    prev[a].degenerate || cur[c].degenerate || prev[a].index == cur[c].index;
                if (d < thr && same_index)
                    cand.emplace_back(d, a, c);
            }
        std::sort(cand.begin(), cand.end());
        std::vector<bool> used(prev.size());
        for (auto [d, a, c] : cand) {
            if (used[a] || ids[c] >= 0)
                continue;
            used[a] = true;
            ids[c] = live[a];
        }
        for (int a = 0; a < int(prev.size()); ++a)
            if (!used[a])
                dia.events.push_back({0.5 * (g[t - 1] + g[t]), "death", live[a]});
        for (int c = 0; c < int(cur.size()); ++c) {
            if (ids[c] < 0) {
                ids[c] = int(dia.branches.size());
                dia.branches.push_back({ids[c], {}});
                if (t > 0)
                    dia.events.push_back({0.5 * (g[t - 1] + g[t]), "birth", ids[c]});
            }
            dia.branches[ids[c]].points.push_back(cur[c]);
        }
        prev = std::move(cur);
        live = std::move(ids);
    }
    for (const auto& br : dia.branches)
        for (std::size_t k = 1; k < br.points.size(); ++k) {
            const auto& a = br.points[k - 1];
            const auto& b = br.points[k];
            const double r = b.value - a.value - 0.5 * (a.dt_value + b.dt_value) * (b.t - a.t);
            dia.max_step_residual = std::max(dia.max_step_residual, std::abs(r));
        }
    (void)tol;
    return dia;
}

namespace families {

namespace {

FamilyGrid base_grid(const TimeGrid& time, Eigen::Index nx, std::vector<FiberAxis> fiber, Tail tail,
                     double R)
{
    FamilyGrid g;
    g.time = time;
    g.base = BaseKind::Circle;
    g.xs = Eigen::VectorXd::LinSpaced(nx, 0.0, 1.0 - 1.0 / double(nx));
    g.fiber = std::move(fiber);
    g.tail = tail;
    g.R = R;
    return g;
}

double chi(const Splice& sp, double eta)
{
    const double a = std::abs(eta);
    return 1.0 - num::smoothstep((a - sp.w1) / (sp.w2 - sp.w1));
}

constexpr double kBumpLength = 2.0;

double bump(const Splice& sp, double eta)
{
    const double u = (eta - sp.w2) / kBumpLength;
    if (u <= 0.0 || u >= 1.0)
        return 0.0;
    return (1.0 - std::cos(2 * M_PI * u)) / kBumpLength;
}

double bump_integral(const Splice& sp, double eta)
{
    const double u = std::clamp((eta - sp.w2) / kBumpLength, 0.0, 1.0);
    return u - std::sin(2 * M_PI * u) / (2 * M_PI);
}

// Integral of chi (f' - slope) from 0 to eta.
double core_integral(const Splice& sp, double t, double x, double eta)
{
    auto integrand = [&](double s) { return chi(sp, s) * (sp.df(t, x, s) - sp.slope); };
    const double f0 = sp.f(t, x, 0.0);
    if (std::abs(eta) <= sp.w1)
        return sp.f(t, x, eta) - f0 - sp.slope * eta;
    if (eta > 0) {
        const double inner = sp.f(t, x, sp.w1) - f0 - sp.slope * sp.w1;
        return inner + num::gauss<10>(integrand, sp.w1, std::min(eta, sp.w2));
    }
    const double inner = sp.f(t, x, -sp.w1) - f0 + sp.slope * sp.w1;
    return inner - num::gauss<10>(integrand, std::max(eta, -sp.w2), -sp.w1);
}

double compensation(const Splice& sp, double t, double x)
{
    return -(core_integral(sp, t, x, sp.w2) - core_integral(sp, t, x, -sp.w2));
}

}  // namespace

double spliced_value(const Splice& sp, double t, double x, double eta)
{
    return sp.slope * eta + sp.f(t, x, 0.0) + core_integral(sp, t, x, eta) +
           compensation(sp, t, x) * bump_integral(sp, eta);
}

double spliced_derivative(const Splice& sp, double t, double x, double eta)
{
    return sp.slope + chi(sp, eta) * (sp.df(t, x, eta) - sp.slope) + compensation(sp, t, x) * bump(sp, eta);
}

GeneratingFunctionFamily stabilized(const TimeGrid& time, Eigen::Index nx,
                                    std::function<double(double, double)> g, int fiber_dim,
                                    FiberAxis axis)
{
    std::vector<FiberAxis> fiber(fiber_dim, axis);
    Tail tail{TailKind::Quadratic, {1.0, 1.0}};
    const double R = 10.0;
    auto K = [g, fiber_dim](double t, double x, const Eigen::Vector2d& e) {
        return g(t, x) + e[0] * e[0] + (fiber_dim > 1 ? e[1] * e[1] : 0.0);
    };
    return GeneratingFunctionFamily::from_function(base_grid(time, nx, fiber, tail, R), K);
}

GeneratingFunctionFamily spliced(const TimeGrid& time, Eigen::Index nx, Splice sp, FiberAxis axis)
{
    if (!(axis.hi >= sp.w2 + kBumpLength && axis.lo <= -sp.w2))
        throw ArgumentError("spliced: fiber axis must contain the splice window");
    Tail tail{TailKind::Linear, {sp.slope, 0.0}};
    // Fiber scans hit the same (t, x) many times in a row; keep the last compensation.
    struct Cache {
        double t = std::nan(""), x = std::nan(""), kappa = 0.0;
    };
    auto cache = std::make_shared<Cache>();
    auto K = [sp, cache](double t, double x, const Eigen::Vector2d& e) {
        if (cache->t != t || cache->x != x) {
            cache->kappa = compensation(sp, t, x);
            cache->t = t;
            cache->x = x;
        }
        const double eta = e[0];
        return sp.slope * eta + sp.f(t, x, 0.0) + core_integral(sp, t, x, eta) +
               cache->kappa * bump_integral(sp, eta);
    };
    return GeneratingFunctionFamily::from_function(base_grid(time, nx, {axis}, tail, 10.0), K);
}

GeneratingFunctionFamily cubic_fiber(const TimeGrid& time, Eigen::Index nx,
                                     std::function<double(double, double)> s,
                                     std::function<double(double)> g, double scale)
{
    Splice sp;
    sp.f = [=](double t, double x, double e) { return scale * (e * e * e / 3.0 - s(t, x) * e) + g(x); };
    sp.df = [=](double t, double x, double e) { return scale * (e * e - s(t, x)); };
    sp.slope = 2.0 * std::max(1.0, scale);
    return spliced(time, nx, sp);
}

GeneratingFunctionFamily double_well(const TimeGrid& time, Eigen::Index nx, std::function<double(double)> g)
{
    Splice sp;
    sp.f = [=](double, double x, double e) { return e * e * e * e - e * e + g(x) * e; };
    sp.df = [=](double, double x, double e) { return 4 * e * e * e - 2 * e + g(x); };
    sp.slope = 1.0;
    return spliced(time, nx, sp);
}

GeneratingFunctionFamily fold(const TimeGrid& time, double t0, Eigen::Index nx)
{
    auto s = [t0](double t, double x) { return t - t0 - 0.4 * (1.0 - std::cos(2 * M_PI * x)); };
    return cubic_fiber(time, nx, s, [](double) { return 0.0; });
}

double DriftProfile::L() const
{
    return 2.0 * a * a / (A * M_PI * M_PI);
}

double DriftProfile::phi(double eta) const
{
    const double l = L(), jl = m - a, jr = m;
    const double beta = 2.0 * (A + a - m) / l + 1.0, gamma = 2.0 * m / l + 1.0;
    if (eta <= jl - l || eta >= jr + l)
        return eta;
    if (eta < jl) {
        const double u = (eta - (jl - l)) / l;
        return jl - l + l * (u - 0.5 * u * u + beta * (0.5 * u - std::sin(2 * M_PI * u) / (4 * M_PI)));
    }
    if (eta <= jr)
        return 0.5 * A * (1.0 + std::cos(M_PI * (eta - jl) / a));
    const double v = (eta - jr) / l;
    return l * (0.5 * v * v + gamma * (0.5 * v - std::sin(2 * M_PI * v) / (4 * M_PI)));
}

double DriftProfile::dphi(double eta) const
{
    const double l = L(), jl = m - a, jr = m;
    const double beta = 2.0 * (A + a - m) / l + 1.0, gamma = 2.0 * m / l + 1.0;
    if (eta <= jl - l || eta >= jr + l)
        return 1.0;
    if (eta < jl) {
        const double u = (eta - (jl - l)) / l, s = std::sin(M_PI * u);
        return 1.0 - u + beta * s * s;
    }
    if (eta <= jr)
        return -0.5 * A * M_PI / a * std::sin(M_PI * (eta - jl) / a);
    const double v = (eta - jr) / l, s = std::sin(M_PI * v);
    return v + gamma * s * s;
}

double DriftProfile::w(double eta) const
{
    const double l = L(), jl = m - a, jr = m;
    if (eta <= jl - l || eta >= jr + l)
        return 0.0;
    if (eta < jl)
        return -0.5 * num::smoothstep((eta - (jl - l)) / l);
    if (eta <= jr)
        return -0.5 * std::cos(M_PI * (eta - jl) / a);
    return 0.5 * num::smoothstep(1.0 - (eta - jr) / l);
}

double DriftProfile::dw(double eta) const
{
    const double l = L(), jl = m - a, jr = m;
    if (eta <= jl - l || eta >= jr + l)
        return 0.0;
    if (eta < jl)
        return -0.5 * num::smoothstep_d((eta - (jl - l)) / l) / l;
    if (eta <= jr)
        return 0.5 * M_PI / a * std::sin(M_PI * (eta - jl) / a);
    return -0.5 * num::smoothstep_d(1.0 - (eta - jr) / l) / l;
}

GeneratingFunctionFamily drift(const TimeGrid& time, std::function<double(double)> c,
                               std::function<double(double)> dc, DriftProfile prof, Eigen::Index nx,
                               FiberAxis axis, double R)
{
    Tail tail{TailKind::Linear, {1.0, 0.0}};
    auto K = [=](double t, double, const Eigen::Vector2d& e) { return prof.phi(e[0]) + c(t) * prof.w(e[0]); };
    FieldFn dK = [=](double t, double, const Eigen::Vector2d& e) { return dc(t) * prof.w(e[0]); };
    return GeneratingFunctionFamily::from_function(base_grid(time, nx, {axis}, tail, R), K, dK);
}

}  // namespace families

}  // namespace leglab
