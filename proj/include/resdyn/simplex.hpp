#pragma once

// Dense two-phase simplex for the small curtailment LPs. Deterministic:
// Dantzig pricing with lowest-index tie-breaks, switching to Bland's rule
// after a stall so cycling cannot occur.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace resdyn {

struct LpProblem {
    // minimize c^T x  subject to  a_eq x = b_eq,  a_ub x <= b_ub,  lb <= x <= ub
    std::size_t n = 0;
    std::vector<double> c;
    std::vector<std::vector<double>> a_eq;
    std::vector<double> b_eq;
    std::vector<std::vector<double>> a_ub;
    std::vector<double> b_ub;
    std::vector<double> lb, ub;  // +-infinity allowed
};

struct LpSolution {
    enum class Status { optimal, infeasible, unbounded, iteration_limit };
    Status status = Status::optimal;
    std::vector<double> x;
    double objective = 0.0;
};

namespace detail_lp {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;

struct Tableau {
    std::size_t m = 0, n = 0;   // rows, structural+slack columns
    std::vector<double> a;      // (m) x (n + 1), last column is b
    std::vector<std::size_t> basis;

    double& at(std::size_t r, std::size_t cidx) { return a[r * (n + 1) + cidx]; }
    [[nodiscard]] double at(std::size_t r, std::size_t cidx) const { return a[r * (n + 1) + cidx]; }
    double& rhs(std::size_t r) { return a[r * (n + 1) + n]; }
    [[nodiscard]] double rhs(std::size_t r) const { return a[r * (n + 1) + n]; }

    void pivot(std::size_t pr, std::size_t pc) {
        double piv = at(pr, pc);
        double inv = 1.0 / piv;
        for (std::size_t j = 0; j <= n; ++j) at(pr, j) *= inv;
        for (std::size_t r = 0; r < m; ++r) {
            if (r == pr) continue;
            double f = at(r, pc);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n; ++j) at(r, j) -= f * at(pr, j);
        }
        basis[pr] = pc;
    }
};

/// One simplex phase on reduced costs z; returns false on unbounded.
inline bool run_phase(Tableau& t, std::vector<double>& z, double& obj, long& iters, long max_iters,
                      bool& hit_limit) {
    long stall = 0;
    bool bland = false;
    double last_obj = obj;
    while (iters < max_iters) {
        // entering column
        std::size_t enter = t.n;
        if (!bland) {
            double best = -kPivotTol;
            for (std::size_t j = 0; j < t.n; ++j)
                if (z[j] < best) { best = z[j]; enter = j; }
        } else {
            for (std::size_t j = 0; j < t.n; ++j)
                if (z[j] < -kPivotTol) { enter = j; break; }
        }
        if (enter == t.n) return true;  // optimal
        // ratio test, lowest index on ties
        std::size_t leave = t.m;
        double best_ratio = std::numeric_limits<double>::max();
        for (std::size_t r = 0; r < t.m; ++r) {
            double a = t.at(r, enter);
            if (a > kPivotTol) {
                double ratio = t.rhs(r) / a;
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 && (leave == t.m || t.basis[r] < t.basis[leave]))) {
                    best_ratio = ratio;
                    leave = r;
                }
            }
        }
        if (leave == t.m) return false;  // unbounded
        double zc = z[enter];
        t.pivot(leave, enter);
        // update reduced costs from the pivot row
        for (std::size_t j = 0; j <= t.n; ++j) {
            double v = t.at(leave, j);
            if (v != 0.0) {
                if (j < t.n) z[j] -= zc * v;
            }
        }
        obj -= zc * t.rhs(leave);
        ++iters;
        if (std::abs(obj - last_obj) < 1e-13) {
            if (++stall > 50) bland = true;  // degeneracy guard
        } else {
            stall = 0;
            last_obj = obj;
        }
    }
    hit_limit = true;
    return true;
}

}  // namespace detail_lp

/// Solve a dense LP. Free variables are split internally; finite bounds become
/// shifted variables plus upper-bound rows.
inline LpSolution solve_lp(const LpProblem& p, long max_iters = 100000) {
    using namespace detail_lp;
    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t n = p.n;
    if (p.c.size() != n || p.lb.size() != n || p.ub.size() != n)
        throw std::invalid_argument("solve_lp: inconsistent problem dimensions");

    // standard-form mapping: x_i = lb_i + y_i (y >= 0), free x_i = y+ - y-
    struct VarMap { std::size_t col = 0, col_neg = 0; bool free = false; double shift = 0.0; };
    std::vector<VarMap> vmap(n);
    std::size_t n_std = 0;
    std::size_t n_ub_rows = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (p.lb[i] == -inf) {
            vmap[i].free = true;
            vmap[i].col = n_std++;
            vmap[i].col_neg = n_std++;
            if (p.ub[i] != inf)
                throw std::invalid_argument("solve_lp: free variable with finite upper bound unsupported");
        } else {
            vmap[i].shift = p.lb[i];
            vmap[i].col = n_std++;
            if (p.ub[i] != inf) ++n_ub_rows;
        }
    }
    const std::size_t m = p.a_eq.size() + p.a_ub.size() + n_ub_rows;
    const std::size_t n_slack = p.a_ub.size() + n_ub_rows;
    const std::size_t n_total = n_std + n_slack + m;  // + artificials

    Tableau t;
    t.m = m;
    t.n = n_std + n_slack + m;
    t.a.assign(m * (t.n + 1), 0.0);
    t.basis.assign(m, 0);

    auto fill_row = [&](std::size_t r, const std::vector<double>& coeffs, double b) {
        if (coeffs.size() != n) throw std::invalid_argument("solve_lp: bad row size");
        double rhs = b;
        for (std::size_t i = 0; i < n; ++i) {
            double a = coeffs[i];
            if (a == 0.0) continue;
            t.at(r, vmap[i].col) += a;
            if (vmap[i].free) t.at(r, vmap[i].col_neg) -= a;
            else rhs -= a * vmap[i].shift;
        }
        t.rhs(r) = rhs;
    };

    std::size_t row = 0;
    for (std::size_t e = 0; e < p.a_eq.size(); ++e, ++row) fill_row(row, p.a_eq[e], p.b_eq[e]);
    for (std::size_t u = 0; u < p.a_ub.size(); ++u, ++row) {
        fill_row(row, p.a_ub[u], p.b_ub[u]);
        t.at(row, n_std + u) = 1.0;  // slack
    }
    std::size_t ub_slack = n_std + p.a_ub.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!vmap[i].free && p.ub[i] != inf) {
            t.at(row, vmap[i].col) = 1.0;
            t.at(row, ub_slack++) = 1.0;
            t.rhs(row) = p.ub[i] - vmap[i].shift;
            ++row;
        }
    }
    // nonnegative right-hand sides, then artificial identity basis
    for (std::size_t r = 0; r < m; ++r) {
        if (t.rhs(r) < 0.0)
            for (std::size_t j = 0; j <= t.n; ++j) t.at(r, j) = -t.at(r, j);
        t.at(r, n_std + n_slack + r) = 1.0;
        t.basis[r] = n_std + n_slack + r;
    }

    // phase 1: minimize the artificial sum
    std::vector<double> z1(t.n, 0.0);
    double obj1 = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t j = 0; j < n_std + n_slack; ++j) z1[j] -= t.at(r, j);
        obj1 -= t.rhs(r);
    }
    long iters = 0;
    bool hit_limit = false;
    LpSolution sol;
    if (!run_phase(t, z1, obj1, iters, max_iters, hit_limit)) {
        sol.status = LpSolution::Status::infeasible;  // phase 1 cannot be unbounded
        return sol;
    }
    if (hit_limit) {
        sol.status = LpSolution::Status::iteration_limit;
        return sol;
    }
    if (-obj1 > kFeasTol) {  // leftover artificial mass
        sol.status = LpSolution::Status::infeasible;
        return sol;
    }
    // drive any artificial still in the basis out (or zero its row)
    for (std::size_t r = 0; r < m; ++r) {
        if (t.basis[r] >= n_std + n_slack) {
            std::size_t enter = t.n;
            for (std::size_t j = 0; j < n_std + n_slack; ++j)
                if (std::abs(t.at(r, j)) > kPivotTol) { enter = j; break; }
            if (enter != t.n) t.pivot(r, enter);
        }
    }

    // phase 2 reduced costs: c reduced by the current basis
    std::vector<double> cost(t.n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        cost[vmap[i].col] += p.c[i];
        if (vmap[i].free) cost[vmap[i].col_neg] -= p.c[i];
    }
    for (std::size_t j = n_std + n_slack; j < t.n; ++j) cost[j] = 1e9;  // artificials stay out
    std::vector<double> z2 = cost;
    double obj2 = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        double cb = cost[t.basis[r]];
        if (cb == 0.0) continue;
        for (std::size_t j = 0; j < t.n; ++j) z2[j] -= cb * t.at(r, j);
        obj2 += cb * t.rhs(r);
    }
    hit_limit = false;
    if (!run_phase(t, z2, obj2, iters, max_iters, hit_limit)) {
        sol.status = LpSolution::Status::unbounded;
        return sol;
    }
    if (hit_limit) {
        sol.status = LpSolution::Status::iteration_limit;
        return sol;
    }

    std::vector<double> y(t.n, 0.0);
    for (std::size_t r = 0; r < m; ++r) y[t.basis[r]] = t.rhs(r);
    sol.x.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (vmap[i].free) sol.x[i] = y[vmap[i].col] - y[vmap[i].col_neg];
        else sol.x[i] = vmap[i].shift + y[vmap[i].col];
    }
    sol.objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) sol.objective += p.c[i] * sol.x[i];
    sol.status = LpSolution::Status::optimal;
    return sol;
}

}  // namespace resdyn
