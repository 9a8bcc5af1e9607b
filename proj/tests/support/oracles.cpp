#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "illiq/lp.hpp"

namespace illiq::testing {

double numeric_conjugate(const ConvexFunction& f, double y, double radius) {
    const Interval dom = f.domain();
    double lo = std::max(dom.lo, -radius), hi = std::min(dom.hi, radius);
    if (lo > hi) return -kInf;

    double best = -kInf, bestx = lo;
    auto consider = [&](double x) {
        const double fx = f.value_clamped(x, 1e-12);
        if (!std::isfinite(fx)) return;
        const double v = x * y - fx;
        if (v > best) {
            best = v;
            bestx = x;
        }
    };

    const int coarse = 4000;
    for (int i = 0; i <= coarse; ++i) consider(lo + (hi - lo) * i / coarse);
    for (double b : f.breakpoints())
        if (b >= lo && b <= hi) consider(b);
    consider(lo);
    consider(hi);

    double step = (hi - lo) / coarse;
    for (int round = 0; round < 8; ++round) {
        const double a = std::max(lo, bestx - step), b = std::min(hi, bestx + step);
        for (int i = 0; i <= 200; ++i) consider(a + (b - a) * i / 200.0);
        step = (b - a) / 100.0;
        if (step <= 0.0) break;
    }
    return best;
}

namespace {

struct BoxBounds {
    Eigen::VectorXd lo, hi;
};

/// Per-coordinate bounds read off constraint rows with one nonzero entry.
BoxBounds coordinate_box(const Polyhedron& D, int dim, double radius) {
    BoxBounds box;
    box.lo = Eigen::VectorXd::Constant(dim, -radius);
    box.hi = Eigen::VectorXd::Constant(dim, radius);
    for (Eigen::Index r = 0; r < D.rows(); ++r) {
        int nz = -1;
        bool single = true;
        for (int j = 0; j < dim; ++j) {
            if (D.A(r, j) != 0.0) {
                if (nz >= 0) single = false;
                nz = j;
            }
        }
        if (!single || nz < 0) {
            if (!single) throw std::logic_error("subgradient oracle: non-box constraint");
            continue;
        }
        const double a = D.A(r, nz), b = D.b(r);
        if (a > 0.0)
            box.hi[nz] = std::min(box.hi[nz], b / a);
        else
            box.lo[nz] = std::max(box.lo[nz], b / a);
    }
    return box;
}

double finite_subgrad(const ConvexFunction& f, double x) {
    const Interval sd = f.subdifferential(x);
    if (std::isfinite(sd.hi)) return sd.hi;
    if (std::isfinite(sd.lo)) return sd.lo;
    return sd.hi > 0 ? 1e6 : -1e6;
}

double clampd(double x, const Interval& dom) {
    return std::min(std::max(x, dom.lo), dom.hi);
}

}  // namespace

double subgradient_alm_value(const MarketModel& model, const LossSpec& loss,
                             const ClaimProcess& c, int iters, double radius) {
    const ScenarioTree& tree = *model.tree;
    const int J = model.assets;

    std::vector<int> slot(tree.num_nodes(), -1);
    std::vector<int> nonleaf;
    for (int n = 0; n < tree.num_nodes(); ++n)
        if (!tree.is_leaf(n)) {
            slot[n] = static_cast<int>(nonleaf.size());
            nonleaf.push_back(n);
        }
    const int dim = static_cast<int>(nonleaf.size()) * J;

    std::vector<BoxBounds> box;
    box.reserve(nonleaf.size());
    for (int n : nonleaf) box.push_back(coordinate_box(model.constraint(n), J, radius));

    auto project = [&](Eigen::VectorXd& v) {
        for (size_t k = 0; k < nonleaf.size(); ++k)
            for (int j = 0; j < J; ++j) {
                double& z = v[k * J + j];
                z = std::min(std::max(z, box[k].lo[j]), box[k].hi[j]);
            }
    };

    auto increment = [&](const Eigen::VectorXd& v, int n, int j) {
        const int par = tree.parent(n);
        double dx = model.theta(n, j);
        if (slot[n] >= 0) dx += v[slot[n] * J + j];
        if (par >= 0 && slot[par] >= 0) dx -= v[slot[par] * J + j];
        return dx;
    };

    auto objective = [&](const Eigen::VectorXd& v) {
        double total = 0.0;
        for (int n = 0; n < tree.num_nodes(); ++n) {
            double y = c.scalar(n);
            for (int j = 0; j < J; ++j) {
                const double fv = model.cost(n, j).value(increment(v, n, j));
                if (!std::isfinite(fv)) return kInf;
                y += fv;
            }
            const double lv = loss.v[tree.time(n)].value(y);
            if (!std::isfinite(lv)) return kInf;
            total += tree.prob(n) * lv;
        }
        return total;
    };

    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    project(v);
    double best = objective(v);
    Eigen::VectorXd bestv = v;

    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
        bool interior = true;
        for (int n = 0; n < tree.num_nodes() && interior; ++n) {
            double y = c.scalar(n);
            for (int j = 0; j < J; ++j) y += model.cost(n, j).value_clamped(increment(v, n, j), 1e-9);
            if (!std::isfinite(y) || !loss.v[tree.time(n)].domain().contains(y, 1e-9)) {
                interior = false;
                break;
            }
            const double dv =
                finite_subgrad(loss.v[tree.time(n)], clampd(y, loss.v[tree.time(n)].domain()));
            for (int j = 0; j < J; ++j) {
                const double dphi = finite_subgrad(
                    model.cost(n, j), clampd(increment(v, n, j), model.cost(n, j).domain()));
                const double w = tree.prob(n) * dv * dphi;
                if (slot[n] >= 0) g[slot[n] * J + j] += w;
                const int par = tree.parent(n);
                if (par >= 0 && slot[par] >= 0) g[slot[par] * J + j] -= w;
            }
        }
        if (!interior) {
            v = bestv;
            continue;
        }
        const double norm = g.norm();
        if (norm < 1e-14) break;
        v -= (0.5 / std::sqrt(it + 1.0)) * g / norm;
        project(v);
        const double f = objective(v);
        if (f < best) {
            best = f;
            bestv = v;
        }
    }

    // Line-search polish: golden section along coordinates and random
    // directions; each restriction of the objective is convex.
    std::mt19937 rng(1234);
    std::normal_distribution<double> gauss;
    v = bestv;
    double width = 2.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int round = 0; round < 600; ++round) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
        if (round % 3 != 0 && dim > 0) {
            d[round % dim] = 1.0;
        } else {
            for (int i = 0; i < dim; ++i) d[i] = gauss(rng);
            if (d.norm() < 1e-12) continue;
            d /= d.norm();
        }
        double a = -width, b = width;
        auto f1d = [&](double t) {
            Eigen::VectorXd w = v + t * d;
            project(w);
            return objective(w);
        };
        double t1 = b - gr * (b - a), t2 = a + gr * (b - a);
        double f1 = f1d(t1), f2 = f1d(t2);
        for (int k = 0; k < 48; ++k) {
            if (f1 <= f2) {
                b = t2;
                t2 = t1;
                f2 = f1;
                t1 = b - gr * (b - a);
                f1 = f1d(t1);
            } else {
                a = t1;
                t1 = t2;
                f1 = f2;
                t2 = a + gr * (b - a);
                f2 = f1d(t2);
            }
        }
        const double t = f1 <= f2 ? t1 : t2;
        Eigen::VectorXd w = v + t * d;
        project(w);
        const double f = objective(w);
        if (f < best - 1e-15) {
            best = f;
            v = w;
        } else {
            width = std::max(width * 0.97, 1e-7);
        }
    }
    return best;
}

double enumerate_superhedge(const MarketModel& model, const ClaimProcess& c,
                            const ClaimProcess& p, HedgeSide side, double box) {
    const ScenarioTree& tree = *model.tree;
    if (tree.horizon() != 1)
        throw std::logic_error("enumerate_superhedge: one-period trees only");
    const int J = model.assets;
    const int d = J + 1;  // [alpha, x_0, ..., x_{J-1}]

    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> rhs;
    auto add_row = [&](const Eigen::RowVectorXd& a, double b) {
        rows.push_back(a);
        rhs.push_back(b);
    };

    const double psign = side == HedgeSide::Sup ? -1.0 : 1.0;  // alpha coefficient sign
    for (int n = 0; n < tree.num_nodes(); ++n) {
        const double w = tree.is_leaf(n) ? -1.0 : 1.0;
        std::vector<std::vector<AffinePiece>> pieces;
        for (int j = 0; j < J; ++j) pieces.push_back(affine_pieces(model.cost(n, j)));

        std::vector<size_t> idx(J, 0);
        while (true) {
            Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(d);
            double offset = 0.0;
            for (int j = 0; j < J; ++j) {
                a[1 + j] = pieces[j][idx[j]].slope * w;
                offset += pieces[j][idx[j]].offset;
            }
            a[0] = psign * p.scalar(n);
            const double cpart = side == HedgeSide::Sup ? -c.scalar(n) : c.scalar(n);
            add_row(a, cpart - offset);
            int j = 0;
            while (j < J && ++idx[j] == pieces[j].size()) idx[j++] = 0;
            if (j == J) break;
        }
        for (int j = 0; j < J; ++j) {
            const Interval dom = model.cost(n, j).domain();
            if (std::isfinite(dom.hi)) {
                Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(d);
                a[1 + j] = w;
                add_row(a, dom.hi);
            }
            if (std::isfinite(dom.lo)) {
                Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(d);
                a[1 + j] = -w;
                add_row(a, -dom.lo);
            }
        }
    }
    const Polyhedron& D0 = model.constraint(0);
    for (Eigen::Index r = 0; r < D0.rows(); ++r) {
        Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(d);
        for (int j = 0; j < J; ++j) a[1 + j] = D0.A(r, j);
        add_row(a, D0.b(r));
    }
    for (int i = 0; i < d; ++i) {
        Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(d);
        const double lim = i == 0 ? 10.0 * box : box;
        a[i] = 1.0;
        add_row(a, lim);
        a[i] = -1.0;
        add_row(a, lim);
    }

    const int m = static_cast<int>(rows.size());
    double best = side == HedgeSide::Sup ? kInf : -kInf;
    std::vector<int> pick(d, 0);
    for (int i = 0; i < d; ++i) pick[i] = i;
    auto advance = [&]() {
        int i = d - 1;
        while (i >= 0 && pick[i] == m - d + i) --i;
        if (i < 0) return false;
        ++pick[i];
        for (int k = i + 1; k < d; ++k) pick[k] = pick[k - 1] + 1;
        return true;
    };
    do {
        Eigen::MatrixXd A(d, d);
        Eigen::VectorXd b(d);
        for (int i = 0; i < d; ++i) {
            A.row(i) = rows[pick[i]];
            b[i] = rhs[pick[i]];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        lu.setThreshold(1e-9);
        if (lu.rank() < d) continue;
        const Eigen::VectorXd z = lu.solve(b);
        bool feasible = true;
        for (int r = 0; r < m && feasible; ++r)
            feasible = rows[r].dot(z) <= rhs[r] + 1e-7 * (1.0 + std::abs(rhs[r]));
        if (!feasible) continue;
        if (side == HedgeSide::Sup)
            best = std::min(best, z[0]);
        else
            best = std::max(best, z[0]);
    } while (advance());
    return best;
}

namespace {

double alm_value(const MarketModel& model, const LossSpec& loss, const ClaimProcess& c) {
    const PrimalSolution sol = solve_alm(model, loss, c);
    if (sol.status == SolveStatus::UnboundedBelow) return -kInf;
    if (sol.status != SolveStatus::Optimal) return kInf;
    return sol.value;
}

}  // namespace

double bisect_swap_rate(const MarketModel& model, const LossSpec& loss,
                        const ClaimProcess& cbar, const ClaimProcess& p,
                        const ClaimProcess& c, Side side, double level_tol) {
    const double level = alm_value(model, loss, cbar);
    if (!std::isfinite(level)) throw std::runtime_error("swap oracle: base position unpriceable");

    auto g = [&](double alpha) {
        return side == Side::Short ? alm_value(model, loss, cbar + c - p * alpha)
                                   : alm_value(model, loss, cbar - c + p * alpha);
    };
    auto ok = [&](double alpha) { return g(alpha) <= level + level_tol; };

    if (side == Side::Short) {
        double hi = 1.0;
        int k = 0;
        while (!ok(hi) && k++ < 80) hi = hi * 2.0 + 1.0;
        if (!ok(hi)) return kInf;
        double lo = std::min(hi - 1.0, -1.0);
        k = 0;
        while (ok(lo) && k++ < 80) lo = lo * 2.0 - 1.0;
        if (ok(lo)) return -kInf;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (ok(mid) ? hi : lo) = mid;
        }
        return hi;
    }
    double lo = -1.0;
    int k = 0;
    while (!ok(lo) && k++ < 80) lo = lo * 2.0 - 1.0;
    if (!ok(lo)) return -kInf;
    double hi = std::max(lo + 1.0, 1.0);
    k = 0;
    while (ok(hi) && k++ < 80) hi = hi * 2.0 + 1.0;
    if (ok(hi)) return kInf;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

double defining_sigma_A(const MarketModel& model, const LossSpec& loss, const ClaimProcess& q) {
    const ScenarioTree& tree = *model.tree;
    const int J = model.assets;
    for (int n = 0; n < tree.num_nodes(); ++n)
        if (q.scalar(n) < -1e-12) return kInf;
    for (const auto& v : loss.v)
        if (!v.is_pwl()) throw std::logic_error("defining_sigma_A: pwl losses only");

    LpBuilder lp;
    std::vector<int> yvar(tree.num_nodes()), zvar(tree.num_nodes());
    std::vector<std::vector<int>> uvar(tree.num_nodes()), xvar(tree.num_nodes());

    for (int n = 0; n < tree.num_nodes(); ++n) {
        const ConvexFunction& V = loss.v[tree.time(n)];
        yvar[n] = lp.add_var(V.domain().lo, V.domain().hi);
        zvar[n] = lp.add_var(-kInf, kInf);
        for (const AffinePiece& pc : affine_pieces(V))
            lp.add_row(LpBuilder::Sense::GE, pc.offset,
                       {{zvar[n], 1.0}, {yvar[n], -pc.slope}});
        uvar[n].resize(J);
        for (int j = 0; j < J; ++j) uvar[n][j] = lp.add_var(-kInf, kInf);
        if (!tree.is_leaf(n)) {
            xvar[n].resize(J);
            for (int j = 0; j < J; ++j) xvar[n][j] = lp.add_var(-kInf, kInf);
            const Polyhedron& D = model.constraint(n);
            for (Eigen::Index r = 0; r < D.rows(); ++r) {
                std::vector<std::pair<int, double>> terms;
                for (int j = 0; j < J; ++j)
                    if (D.A(r, j) != 0.0) terms.push_back({xvar[n][j], D.A(r, j)});
                lp.add_row(LpBuilder::Sense::LE, D.b(r), terms);
            }
        }
    }

    std::vector<std::pair<int, double>> risk;
    for (int n = 0; n < tree.num_nodes(); ++n) {
        const int par = tree.parent(n);
        for (int j = 0; j < J; ++j) {
            const ConvexFunction& phi = model.cost(n, j);
            if (!phi.is_pwl()) throw std::logic_error("defining_sigma_A: pwl costs only");
            const double th = model.theta(n, j);
            auto dx_terms = [&](double scale) {
                std::vector<std::pair<int, double>> t;
                if (!tree.is_leaf(n)) t.push_back({xvar[n][j], scale});
                if (par >= 0) t.push_back({xvar[par][j], -scale});
                return t;
            };
            for (const AffinePiece& pc : affine_pieces(phi)) {
                auto terms = dx_terms(-pc.slope);
                terms.push_back({uvar[n][j], 1.0});
                lp.add_row(LpBuilder::Sense::GE, pc.offset + pc.slope * th, terms);
            }
            const Interval dom = phi.domain();
            if (std::isfinite(dom.hi))
                lp.add_row(LpBuilder::Sense::LE, dom.hi - th, dx_terms(1.0));
            if (std::isfinite(dom.lo))
                lp.add_row(LpBuilder::Sense::GE, dom.lo - th, dx_terms(1.0));
        }
        risk.push_back({zvar[n], tree.prob(n)});
        const double wq = tree.prob(n) * q.scalar(n);
        lp.set_cost(yvar[n], -wq);
        for (int j = 0; j < J; ++j) lp.set_cost(uvar[n][j], wq);
    }
    lp.add_row(LpBuilder::Sense::LE, 0.0, risk);

    const LpSolution sol = solve_lp(lp.build());
    if (sol.status == LpSolution::Status::Unbounded) return kInf;
    if (!sol.optimal()) throw std::runtime_error("defining_sigma_A: LP did not solve");
    return -sol.objective;
}

}  // namespace illiq::testing
