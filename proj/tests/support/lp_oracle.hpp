#pragma once

// Brute-force LP oracle: enumerates every basic solution of a small LP and
// returns the best feasible one. Independent of the simplex code.

#include "amerdual/scalar.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace testsupport {

using amerdual::Rational;

struct Constraint {
    std::vector<Rational> a;
    Rational b;
    bool equality = false;  // otherwise a·x >= b
};

/// Unique solution of the square system, if the matrix is nonsingular.
inline std::optional<std::vector<Rational>> solve_square(std::vector<std::vector<Rational>> A, std::vector<Rational> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && A[piv][col].is_zero()) ++piv;
        if (piv == n) return std::nullopt;
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || A[r][col].is_zero()) continue;
            Rational f = A[r][col] / A[col][col];
            for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<Rational> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / A[i][i];
    return x;
}

inline bool satisfies(const std::vector<Constraint>& cons, const std::vector<Rational>& x) {
    for (const auto& c : cons) {
        Rational s(0);
        for (std::size_t j = 0; j < x.size(); ++j) s += c.a[j] * x[j];
        if (c.equality ? s != c.b : s < c.b) return false;
    }
    return true;
}

struct Vertex {
    Rational value;
    std::vector<Rational> x;
};

/// Best vertex of {x : cons} for objective c (maximize if `maximize`).
/// Assumes the feasible set is pointed and the optimum is attained.
inline std::optional<Vertex> best_vertex(const std::vector<Rational>& c, const std::vector<Constraint>& cons,
                                         bool maximize) {
    const std::size_t n = c.size();
    std::vector<std::size_t> eqs, ineqs;
    for (std::size_t i = 0; i < cons.size(); ++i) (cons[i].equality ? eqs : ineqs).push_back(i);
    // Keep a linearly independent subset of the equalities.
    {
        std::vector<std::vector<Rational>> basis;  // reduced rows [a | b]
        std::vector<std::size_t> pivots, kept;
        for (std::size_t i : eqs) {
            std::vector<Rational> r = cons[i].a;
            r.push_back(cons[i].b);
            for (std::size_t j = 0; j < basis.size(); ++j) {
                if (r[pivots[j]].is_zero()) continue;
                Rational f = r[pivots[j]] / basis[j][pivots[j]];
                for (std::size_t t = 0; t <= n; ++t) r[t] -= f * basis[j][t];
            }
            std::size_t piv = 0;
            while (piv < n && r[piv].is_zero()) ++piv;
            if (piv == n) {
                if (!r[n].is_zero()) return std::nullopt;
                continue;
            }
            basis.push_back(std::move(r));
            pivots.push_back(piv);
            kept.push_back(i);
        }
        eqs = std::move(kept);
    }
    if (eqs.size() > n) return std::nullopt;
    const std::size_t need = n - eqs.size();
    std::optional<Vertex> best;
    std::vector<std::size_t> pick;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (pick.size() == need) {
            std::vector<std::vector<Rational>> A;
            std::vector<Rational> b;
            for (std::size_t i : eqs) { A.push_back(cons[i].a); b.push_back(cons[i].b); }
            for (std::size_t i : pick) { A.push_back(cons[i].a); b.push_back(cons[i].b); }
            auto x = solve_square(std::move(A), std::move(b));
            if (!x || !satisfies(cons, *x)) return;
            Rational v(0);
            for (std::size_t j = 0; j < n; ++j) v += c[j] * (*x)[j];
            if (!best || (maximize ? v > best->value : v < best->value)) best = Vertex{v, *x};
            return;
        }
        for (std::size_t i = start; i < ineqs.size(); ++i) {
            pick.push_back(ineqs[i]);
            rec(i + 1);
            pick.pop_back();
        }
    };
    rec(0);
    return best;
}

}  // namespace testsupport
