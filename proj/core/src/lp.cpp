#include "illiq/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace illiq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarState : char { Basic, AtLower, AtUpper, FreeZero };

// Bounded-variable two-phase revised simplex over the standard form
//   M v = b,  l <= v <= u,   v = (structural | slack | artificial).
// Equality rows carry a fixed slack (l = u = 0) so every row has both a
// slack and an artificial column and the initial basis is always valid.
class Simplex {
  public:
    Simplex(const LinearProgram& lp, const LpOptions& opts) : opts_(opts) {
        const Eigen::Index n = lp.num_vars();
        const Eigen::Index me = lp.E.rows(), mi = lp.F.rows();
        m_ = me + mi;
        n_struct_ = n;
        N_ = n + 2 * m_;

        M_.setZero(m_, N_);
        b_.resize(m_);
        if (me > 0) {
            M_.block(0, 0, me, n) = lp.E;
            b_.head(me) = lp.d;
        }
        if (mi > 0) {
            M_.block(me, 0, mi, n) = lp.F;
            b_.tail(mi) = lp.g;
        }

        lo_.resize(N_);
        hi_.resize(N_);
        cost_.setZero(N_);
        lo_.head(n) = lp.lb;
        hi_.head(n) = lp.ub;
        cost_.head(n) = lp.c;
        for (Eigen::Index i = 0; i < m_; ++i) {
            const Eigen::Index s = n + i;
            M_(i, s) = 1.0;
            if (i < me) {
                lo_[s] = 0.0;
                hi_[s] = 0.0;
            } else {
                lo_[s] = 0.0;  // F x + s = g, s >= 0
                hi_[s] = kInf;
            }
        }
        me_ = me;
    }

    LpSolution run() {
        LpSolution sol;
        init_point();
        if (!finite_bound_check(sol)) return sol;

        phase_ = 1;
        Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(N_);
        for (Eigen::Index i = 0; i < m_; ++i) phase1_cost[n_struct_ + m_ + i] = 1.0;
        obj_ = phase1_cost;
        const auto st1 = iterate();
        if (st1 == Inner::Error) {
            sol.status = LpSolution::Status::NumericalError;
            return sol;
        }
        const double scale_b = 1.0 + (m_ > 0 ? b_.cwiseAbs().maxCoeff() : 0.0);
        if (current_objective() > opts_.feas_tol * scale_b) {
            extract_farkas(sol);
            sol.status = LpSolution::Status::Infeasible;
            sol.iterations = iters_;
            return sol;
        }

        // Freeze artificials at zero and switch to the real objective.
        for (Eigen::Index i = 0; i < m_; ++i) {
            const Eigen::Index a = n_struct_ + m_ + i;
            hi_[a] = 0.0;
            if (state_[a] != VarState::Basic) {
                x_[a] = 0.0;
                state_[a] = VarState::AtLower;
            }
        }
        phase_ = 2;
        bland_ = false;
        stall_ = 0;
        obj_ = cost_;
        const auto st2 = iterate();
        sol.iterations = iters_;
        switch (st2) {
            case Inner::Optimal:
                extract_solution(sol);
                break;
            case Inner::Unbounded:
                extract_ray(sol);
                sol.status = LpSolution::Status::Unbounded;
                break;
            case Inner::Error:
                sol.status = LpSolution::Status::NumericalError;
                break;
        }
        return sol;
    }

  private:
    enum class Inner { Optimal, Unbounded, Error };

    void init_point() {
        x_.setZero(N_);
        state_.assign(N_, VarState::AtLower);
        for (Eigen::Index j = 0; j < N_; ++j) {
            if (lo_[j] == -kInf && hi_[j] == kInf) {
                state_[j] = VarState::FreeZero;
                x_[j] = 0.0;
            } else if (std::isfinite(lo_[j]) &&
                       (std::abs(lo_[j]) <= std::abs(hi_[j]) || !std::isfinite(hi_[j]))) {
                state_[j] = VarState::AtLower;
                x_[j] = lo_[j];
            } else {
                state_[j] = VarState::AtUpper;
                x_[j] = hi_[j];
            }
        }
        // Artificials form the starting basis; orient each row so the
        // artificial starts non-negative.
        basis_.resize(m_);
        Eigen::VectorXd resid = b_;
        for (Eigen::Index j = 0; j < n_struct_ + m_; ++j) {
            if (x_[j] != 0.0) resid -= M_.col(j) * x_[j];
        }
        for (Eigen::Index i = 0; i < m_; ++i) {
            const Eigen::Index a = n_struct_ + m_ + i;
            M_(i, a) = resid[i] < 0.0 ? -1.0 : 1.0;
            lo_[a] = 0.0;
            hi_[a] = kInf;
            basis_[i] = a;
            state_[a] = VarState::Basic;
            x_[a] = std::abs(resid[i]);
        }
        // The starting basis is diag(+-1), which is its own inverse.
        Binv_ = Eigen::MatrixXd::Identity(m_, m_);
        for (Eigen::Index i = 0; i < m_; ++i) Binv_(i, i) = M_(i, basis_[i]);
        iters_ = 0;
        bland_ = false;
        stall_ = 0;
        last_obj_ = kInf;
    }

    bool finite_bound_check(LpSolution& sol) {
        for (Eigen::Index j = 0; j < N_; ++j) {
            if (lo_[j] > hi_[j]) {
                sol.status = LpSolution::Status::Infeasible;
                sol.farkas_valid = false;
                return false;
            }
        }
        return true;
    }

    double current_objective() const { return obj_.dot(x_); }

    void refactorize() {
        Eigen::MatrixXd B(m_, m_);
        for (Eigen::Index i = 0; i < m_; ++i) B.col(i) = M_.col(basis_[i]);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
        Binv_ = lu.inverse();
        Eigen::VectorXd rhs = b_;
        for (Eigen::Index j = 0; j < N_; ++j) {
            if (state_[j] != VarState::Basic && x_[j] != 0.0) rhs -= M_.col(j) * x_[j];
        }
        const Eigen::VectorXd xb = Binv_ * rhs;
        for (Eigen::Index i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
    }

    Inner iterate() {
        const int max_iters =
            opts_.max_iters > 0 ? opts_.max_iters
                                : 200 * static_cast<int>(m_ + n_struct_) + 20000;
        int since_refactor = 0;
        while (true) {
            if (iters_ >= max_iters) return Inner::Error;

            // Pricing.
            Eigen::VectorXd cb(m_);
            for (Eigen::Index i = 0; i < m_; ++i) cb[i] = obj_[basis_[i]];
            const Eigen::VectorXd y = Binv_.transpose() * cb;
            const Eigen::VectorXd red = obj_ - M_.transpose() * y;

            const double tol =
                opts_.opt_tol * (1.0 + (N_ > 0 ? obj_.cwiseAbs().maxCoeff() : 0.0));
            Eigen::Index enter = -1;
            int dir = 0;
            double best = tol;
            for (Eigen::Index j = 0; j < N_; ++j) {
                int d = 0;
                double viol = 0.0;
                switch (state_[j]) {
                    case VarState::Basic:
                        continue;
                    case VarState::AtLower:
                        if (red[j] < -tol && hi_[j] > lo_[j]) {
                            d = +1;
                            viol = -red[j];
                        }
                        break;
                    case VarState::AtUpper:
                        if (red[j] > tol && hi_[j] > lo_[j]) {
                            d = -1;
                            viol = red[j];
                        }
                        break;
                    case VarState::FreeZero:
                        if (std::abs(red[j]) > tol) {
                            d = red[j] < 0.0 ? +1 : -1;
                            viol = std::abs(red[j]);
                        }
                        break;
                }
                if (d == 0) continue;
                if (bland_) {
                    enter = j;
                    dir = d;
                    break;
                }
                if (viol > best) {
                    best = viol;
                    enter = j;
                    dir = d;
                }
            }
            if (enter < 0) return Inner::Optimal;

            const Eigen::VectorXd w = Binv_ * M_.col(enter);

            // Ratio test: x_B -> x_B - theta * dir * w, entering moves by
            // dir * theta from its bound.
            double theta = hi_[enter] - lo_[enter];  // bound-flip distance
            if (state_[enter] == VarState::FreeZero) theta = kInf;
            Eigen::Index leave = -1;
            double leave_pivot = 0.0;
            int leave_to = 0;  // -1: lower, +1: upper
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double step = dir * w[i];
                if (std::abs(step) < opts_.pivot_tol) continue;
                const Eigen::Index bj = basis_[i];
                double t, to;
                if (step > 0.0) {
                    if (lo_[bj] == -kInf) continue;
                    t = (x_[bj] - lo_[bj]) / step;
                    to = -1;
                } else {
                    if (hi_[bj] == kInf) continue;
                    t = (x_[bj] - hi_[bj]) / step;
                    to = +1;
                }
                if (t < 0.0) t = 0.0;
                const bool better =
                    t < theta - 1e-12 ||
                    (t < theta + 1e-12 && leave >= 0 &&
                     (bland_ ? bj < basis_[leave] : std::abs(w[i]) > std::abs(leave_pivot)));
                if (better) {
                    theta = t;
                    leave = i;
                    leave_pivot = w[i];
                    leave_to = static_cast<int>(to);
                }
            }

            if (theta == kInf) {
                if (phase_ == 1) return Inner::Error;  // phase 1 is bounded below
                ray_enter_ = enter;
                ray_dir_ = dir;
                ray_w_ = w;
                return Inner::Unbounded;
            }

            // Apply the step.
            if (theta != 0.0) {
                for (Eigen::Index i = 0; i < m_; ++i) x_[basis_[i]] -= theta * dir * w[i];
                x_[enter] += dir * theta;
            }
            ++iters_;

            if (leave < 0) {
                // Bound flip, basis unchanged.
                state_[enter] = dir > 0 ? VarState::AtUpper : VarState::AtLower;
                x_[enter] = dir > 0 ? hi_[enter] : lo_[enter];
            } else {
                const Eigen::Index out = basis_[leave];
                state_[out] = leave_to < 0 ? VarState::AtLower : VarState::AtUpper;
                x_[out] = leave_to < 0 ? lo_[out] : hi_[out];
                if (lo_[out] == -kInf && hi_[out] == kInf) state_[out] = VarState::FreeZero;
                basis_[leave] = enter;
                state_[enter] = VarState::Basic;
                // Rank-1 update of Binv_.
                const double piv = w[leave];
                Binv_.row(leave) /= piv;
                for (Eigen::Index i = 0; i < m_; ++i) {
                    if (i == leave) continue;
                    const double f = w[i];
                    if (f != 0.0) Binv_.row(i) -= f * Binv_.row(leave);
                }
                if (++since_refactor >= opts_.refactor_every) {
                    refactorize();
                    since_refactor = 0;
                }
            }

            const double cur = current_objective();
            if (cur < last_obj_ - 1e-13 * (1.0 + std::abs(last_obj_))) {
                stall_ = 0;
            } else if (++stall_ >= opts_.stall_limit) {
                bland_ = true;
            }
            last_obj_ = cur;
        }
    }

    Eigen::VectorXd row_multipliers() const {
        Eigen::VectorXd cb(m_);
        for (Eigen::Index i = 0; i < m_; ++i) cb[i] = obj_[basis_[i]];
        return Binv_.transpose() * cb;
    }

    void extract_solution(LpSolution& sol) {
        refactorize();  // clean values before reporting
        const Eigen::VectorXd y = row_multipliers();
        sol.x = x_.head(n_struct_);
        sol.objective = cost_.head(n_struct_).dot(sol.x);
        sol.y_eq = y.head(me_);
        sol.y_ineq = y.tail(m_ - me_);
        sol.reduced_costs = cost_.head(n_struct_) -
                            M_.leftCols(n_struct_).transpose() * y;
        sol.kkt_residual = kkt_residual(y);
        sol.status = sol.kkt_residual <= 1e3 * opts_.feas_tol
                         ? LpSolution::Status::Optimal
                         : LpSolution::Status::NumericalError;
    }

    double kkt_residual(const Eigen::VectorXd& y) const {
        const double scale_b = 1.0 + (m_ > 0 ? b_.cwiseAbs().maxCoeff() : 0.0);
        const double scale_c = 1.0 + (N_ > 0 ? cost_.cwiseAbs().maxCoeff() : 0.0);
        double r = 0.0;
        // Row residuals (slack values already satisfy their bounds by state).
        Eigen::VectorXd ax = Eigen::VectorXd::Zero(m_);
        for (Eigen::Index j = 0; j < N_; ++j) {
            if (x_[j] != 0.0) ax += M_.col(j) * x_[j];
        }
        if (m_ > 0) r = std::max(r, (ax - b_).cwiseAbs().maxCoeff() / scale_b);
        // Bounds.
        for (Eigen::Index j = 0; j < N_; ++j) {
            if (std::isfinite(lo_[j])) r = std::max(r, (lo_[j] - x_[j]) / scale_b);
            if (std::isfinite(hi_[j])) r = std::max(r, (x_[j] - hi_[j]) / scale_b);
        }
        // Dual feasibility over all columns (artificials included, their
        // frozen bounds make any sign admissible).
        const Eigen::VectorXd red = obj_ - M_.transpose() * y;
        for (Eigen::Index j = 0; j < N_; ++j) {
            if (hi_[j] <= lo_[j]) continue;  // fixed column, multiplier free
            switch (state_[j]) {
                case VarState::Basic:
                    r = std::max(r, std::abs(red[j]) / scale_c);
                    break;
                case VarState::AtLower:
                    r = std::max(r, -red[j] / scale_c);
                    break;
                case VarState::AtUpper:
                    r = std::max(r, red[j] / scale_c);
                    break;
                case VarState::FreeZero:
                    r = std::max(r, std::abs(red[j]) / scale_c);
                    break;
            }
        }
        return r;
    }

    void extract_ray(LpSolution& sol) {
        Eigen::VectorXd delta = Eigen::VectorXd::Zero(N_);
        delta[ray_enter_] = ray_dir_;
        for (Eigen::Index i = 0; i < m_; ++i) delta[basis_[i]] = -ray_dir_ * ray_w_[i];
        sol.ray = delta.head(n_struct_);
        sol.x = x_.head(n_struct_);
        sol.objective = -kInf;
    }

    void extract_farkas(LpSolution& sol) {
        // Phase-1 multipliers y prove infeasibility:
        //   y.b + sum_j min over [lo_j, hi_j] of (-y.M_j) v_j  > 0
        // over structural and slack columns.
        const Eigen::VectorXd y = row_multipliers();
        double kappa = y.dot(b_);
        for (Eigen::Index j = 0; j < n_struct_ + m_; ++j) {
            const double a = -y.dot(M_.col(j));
            double contrib;
            if (std::abs(a) <= 1e-12) {
                contrib = 0.0;
            } else if (a > 0.0) {
                contrib = lo_[j] == -kInf ? -kInf : a * lo_[j];
            } else {
                contrib = hi_[j] == kInf ? -kInf : a * hi_[j];
            }
            kappa += contrib;
            if (kappa == -kInf) break;
        }
        sol.farkas_eq = y.head(me_);
        sol.farkas_ineq = y.tail(m_ - me_);
        sol.farkas_valid = kappa > opts_.feas_tol;
        sol.x = x_.head(n_struct_);
    }

    LpOptions opts_;
    Eigen::Index m_ = 0, me_ = 0, n_struct_ = 0, N_ = 0;
    Eigen::MatrixXd M_;
    Eigen::VectorXd b_, lo_, hi_, cost_, obj_, x_;
    std::vector<VarState> state_;
    std::vector<Eigen::Index> basis_;
    Eigen::MatrixXd Binv_;
    int phase_ = 1, iters_ = 0, stall_ = 0;
    bool bland_ = false;
    double last_obj_ = kInf;
    Eigen::Index ray_enter_ = -1;
    int ray_dir_ = 0;
    Eigen::VectorXd ray_w_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts) {
    const Eigen::Index n = lp.num_vars();
    if (lp.lb.size() != n || lp.ub.size() != n)
        throw std::invalid_argument("lp: bound vectors must match objective size");
    if (lp.E.rows() != lp.d.size() || (lp.E.rows() > 0 && lp.E.cols() != n))
        throw std::invalid_argument("lp: equality block shape mismatch");
    if (lp.F.rows() != lp.g.size() || (lp.F.rows() > 0 && lp.F.cols() != n))
        throw std::invalid_argument("lp: inequality block shape mismatch");
    for (Eigen::Index j = 0; j < n; ++j) {
        if (lp.lb[j] == kInf || lp.ub[j] == -kInf || std::isnan(lp.lb[j]) || std::isnan(lp.ub[j]))
            throw std::invalid_argument("lp: bounds must be finite or the permitted infinity");
    }
    Simplex s(lp, opts);
    return s.run();
}

int LpBuilder::add_var(double lb, double ub, double cost) {
    if (lb > ub) throw std::invalid_argument("add_var: lb > ub");
    lb_.push_back(lb);
    ub_.push_back(ub);
    cost_.push_back(cost);
    return static_cast<int>(lb_.size()) - 1;
}

LpBuilder::Row LpBuilder::add_row(Sense sense, double rhs,
                                  const std::vector<std::pair<int, double>>& terms) {
    for (const auto& [v, coef] : terms) {
        (void)coef;
        if (v < 0 || v >= num_vars()) throw std::out_of_range("add_row: unknown variable");
    }
    Row r;
    if (sense == Sense::EQ) {
        r.block = 0;
        r.pos = static_cast<int>(eq_rows_.size());
        eq_rows_.push_back({rhs, terms});
    } else {
        r.block = 1;
        r.pos = static_cast<int>(ineq_rows_.size());
        r.flipped = sense == Sense::GE;
        RawRow raw{rhs, terms};
        if (r.flipped) {
            raw.rhs = -rhs;
            for (auto& [v, coef] : raw.terms) {
                (void)v;
                coef = -coef;
            }
        }
        ineq_rows_.push_back(std::move(raw));
    }
    return r;
}

LinearProgram LpBuilder::build() const {
    LinearProgram lp;
    const int n = num_vars();
    lp.c = Eigen::Map<const Eigen::VectorXd>(cost_.data(), n);
    lp.lb = Eigen::Map<const Eigen::VectorXd>(lb_.data(), n);
    lp.ub = Eigen::Map<const Eigen::VectorXd>(ub_.data(), n);
    lp.E.setZero(static_cast<Eigen::Index>(eq_rows_.size()), n);
    lp.d.resize(static_cast<Eigen::Index>(eq_rows_.size()));
    for (size_t i = 0; i < eq_rows_.size(); ++i) {
        lp.d[static_cast<Eigen::Index>(i)] = eq_rows_[i].rhs;
        for (const auto& [v, coef] : eq_rows_[i].terms)
            lp.E(static_cast<Eigen::Index>(i), v) += coef;
    }
    lp.F.setZero(static_cast<Eigen::Index>(ineq_rows_.size()), n);
    lp.g.resize(static_cast<Eigen::Index>(ineq_rows_.size()));
    for (size_t i = 0; i < ineq_rows_.size(); ++i) {
        lp.g[static_cast<Eigen::Index>(i)] = ineq_rows_[i].rhs;
        for (const auto& [v, coef] : ineq_rows_[i].terms)
            lp.F(static_cast<Eigen::Index>(i), v) += coef;
    }
    return lp;
}

}  // namespace illiq
