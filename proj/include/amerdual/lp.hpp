#pragma once

#include "amerdual/errors.hpp"
#include "amerdual/scalar.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace amerdual::lp {

enum class Sense { Min, Max };
enum class Status { Optimal, Infeasible, Unbounded };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
    }
    return "?";
}

/// Variable bounds; an empty optional is an infinite bound on that side.
template <Field F>
struct Bound {
    std::optional<F> lower = F(0);
    std::optional<F> upper;

    static Bound nonneg() { return {F(0), std::nullopt}; }
    static Bound free() { return {std::nullopt, std::nullopt}; }
    static Bound fixed(const F& v) { return {v, v}; }
    static Bound between(const F& lo, const F& hi) { return {lo, hi}; }
};

template <Field F>
struct Row {
    std::vector<F> coeffs;
    F rhs;
};

/// Dense LP:  opt  c·x  s.t.  eq_rows (a·x = b),  ub_rows (a·x <= b),  bounds.
/// An empty `bounds` vector means every variable is nonnegative.
template <Field F>
struct Problem {
    Sense sense = Sense::Min;
    std::vector<F> objective;
    std::vector<Row<F>> eq_rows;
    std::vector<Row<F>> ub_rows;
    std::vector<Bound<F>> bounds;

    [[nodiscard]] std::size_t num_vars() const { return objective.size(); }
};

template <Field F>
struct Solution {
    Status status = Status::Infeasible;
    std::vector<F> x;                    // present iff Optimal
    std::optional<F> objective_value;    // present iff Optimal

    [[nodiscard]] bool optimal() const { return status == Status::Optimal; }
};

template <Field F>
struct Feasibility {
    bool feasible = false;
    std::optional<std::vector<F>> witness;
};

/// Incremental builder with sparse rows; `build()` produces the dense Problem.
template <Field F>
class Builder {
public:
    using Term = std::pair<std::size_t, F>;

    explicit Builder(Sense sense = Sense::Min) : sense_(sense) {}

    std::size_t add_variable(Bound<F> bound = Bound<F>::nonneg(), F cost = F(0)) {
        bounds_.push_back(std::move(bound));
        costs_.push_back(std::move(cost));
        return costs_.size() - 1;
    }

    void set_cost(std::size_t var, F cost) { costs_.at(var) = std::move(cost); }
    void add_cost(std::size_t var, const F& cost) { costs_.at(var) += cost; }

    void add_eq(std::vector<Term> terms, F rhs) { eq_.push_back({std::move(terms), std::move(rhs)}); }
    void add_le(std::vector<Term> terms, F rhs) { ub_.push_back({std::move(terms), std::move(rhs)}); }

    /// a·x >= rhs; a rhs of -inf makes the row vacuous and it is dropped.
    void add_ge(std::vector<Term> terms, const ExtReal<F>& rhs) {
        if (!rhs) return;
        for (auto& t : terms) t.second = -t.second;
        ub_.push_back({std::move(terms), -*rhs});
    }

    [[nodiscard]] std::size_t num_vars() const { return costs_.size(); }

    [[nodiscard]] Problem<F> build() const {
        Problem<F> p;
        p.sense = sense_;
        p.objective = costs_;
        p.bounds = bounds_;
        auto densify = [&](const SparseRow& r) {
            Row<F> row{std::vector<F>(costs_.size(), F(0)), r.rhs};
            for (const auto& [j, a] : r.terms) {
                if (j >= costs_.size()) throw MalformedProblem("row references unknown variable " + std::to_string(j));
                row.coeffs[j] += a;
            }
            return row;
        };
        for (const auto& r : eq_) p.eq_rows.push_back(densify(r));
        for (const auto& r : ub_) p.ub_rows.push_back(densify(r));
        return p;
    }

private:
    struct SparseRow {
        std::vector<Term> terms;
        F rhs;
    };
    Sense sense_;
    std::vector<F> costs_;
    std::vector<Bound<F>> bounds_;
    std::vector<SparseRow> eq_;
    std::vector<SparseRow> ub_;
};

namespace detail {

template <Field F>
void check_well_formed(const Problem<F>& p) {
    const std::size_t n = p.objective.size();
    auto check_rows = [&](const std::vector<Row<F>>& rows, const char* kind) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].coeffs.size() != n) {
                throw MalformedProblem(std::string(kind) + " row " + std::to_string(i) + " has " +
                                       std::to_string(rows[i].coeffs.size()) + " coefficients, expected " +
                                       std::to_string(n));
            }
        }
    };
    check_rows(p.eq_rows, "equality");
    check_rows(p.ub_rows, "inequality");
    if (!p.bounds.empty() && p.bounds.size() != n) {
        throw MalformedProblem("bounds vector has " + std::to_string(p.bounds.size()) + " entries, expected " +
                               std::to_string(n));
    }
}

/// Dense two-phase tableau simplex with Bland's rule.
template <Field F>
class Simplex {
    using T = field_traits<F>;

public:
    explicit Simplex(const Problem<F>& p) : p_(p) {
        check_well_formed(p);
        standardize();
    }

    Solution<F> solve(bool feasibility_only) {
        Solution<F> out;
        if (trivially_infeasible_) return out;
        build_tableau();
        if (!phase_one()) return out;
        if (feasibility_only) {
            out.status = Status::Optimal;
            out.x = extract();
            out.objective_value = F(0);
            return out;
        }
        if (!phase_two()) {
            out.status = Status::Unbounded;
            return out;
        }
        out.status = Status::Optimal;
        out.x = extract();
        F value(0);
        for (std::size_t j = 0; j < p_.objective.size(); ++j) value += p_.objective[j] * out.x[j];
        out.objective_value = value;
        if constexpr (!T::exact) verify_residuals(out.x);
        return out;
    }

private:
    // x_j = offset + sign * y_pos  (- y_neg for free variables)
    struct ColumnMap {
        std::size_t pos = 0;
        std::optional<std::size_t> neg;
        int sign = 1;
        F offset = F(0);
    };
    struct StdRow {
        std::vector<F> a;  // over standardized structural columns
        F rhs;
        bool equality;
    };

    void standardize() {
        const std::size_t n = p_.objective.size();
        map_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            Bound<F> b = p_.bounds.empty() ? Bound<F>::nonneg() : p_.bounds[j];
            ColumnMap& cm = map_[j];
            if (b.lower && b.upper && T::less(*b.upper, *b.lower)) trivially_infeasible_ = true;
            if (b.lower) {
                cm.pos = nstruct_++;
                cm.sign = 1;
                cm.offset = *b.lower;
                if (b.upper) upper_rows_.push_back({cm.pos, *b.upper - *b.lower});
            } else if (b.upper) {
                cm.pos = nstruct_++;
                cm.sign = -1;
                cm.offset = *b.upper;
            } else {
                cm.pos = nstruct_++;
                cm.neg = nstruct_++;
                cm.sign = 1;
            }
        }
        auto convert = [&](const Row<F>& r, bool eq) {
            StdRow s{std::vector<F>(nstruct_, F(0)), r.rhs, eq};
            for (std::size_t j = 0; j < n; ++j) {
                const F& a = r.coeffs[j];
                if (T::is_zero(a)) continue;
                const ColumnMap& cm = map_[j];
                s.rhs -= a * cm.offset;
                if (cm.sign > 0) s.a[cm.pos] += a; else s.a[cm.pos] -= a;
                if (cm.neg) s.a[*cm.neg] -= a;
            }
            return s;
        };
        for (const auto& r : p_.eq_rows) add_std_row(convert(r, true));
        for (const auto& r : p_.ub_rows) add_std_row(convert(r, false));
        for (const auto& [col, width] : upper_rows_) {
            StdRow s{std::vector<F>(nstruct_, F(0)), width, false};
            s.a[col] = F(1);
            add_std_row(std::move(s));
        }
    }

    void add_std_row(StdRow s) {
        bool all_zero = true;
        for (auto& v : s.a) {
            T::clean(v);
            if (!T::is_zero(v)) all_zero = false;
        }
        if (all_zero) {
            if (s.equality ? !T::is_zero(s.rhs) : T::negative(s.rhs)) trivially_infeasible_ = true;
            return;
        }
        rows_.push_back(std::move(s));
    }

    void build_tableau() {
        const std::size_t m = rows_.size();
        std::size_t nslack = 0;
        for (const auto& r : rows_) if (!r.equality) ++nslack;
        std::vector<bool> needs_art(m, false);
        std::size_t nart = 0;
        for (std::size_t i = 0; i < m; ++i) {
            bool neg = T::negative(rows_[i].rhs);
            needs_art[i] = rows_[i].equality || neg;
            if (needs_art[i]) ++nart;
        }
        art_begin_ = nstruct_ + nslack;
        ncols_ = art_begin_ + nart;
        A_.assign(m, std::vector<F>(ncols_, F(0)));
        b_.assign(m, F(0));
        basis_.assign(m, 0);
        std::size_t slack = nstruct_;
        std::size_t art = art_begin_;
        for (std::size_t i = 0; i < m; ++i) {
            auto& row = A_[i];
            for (std::size_t j = 0; j < nstruct_; ++j) row[j] = rows_[i].a[j];
            b_[i] = rows_[i].rhs;
            std::optional<std::size_t> slack_col;
            if (!rows_[i].equality) {
                slack_col = slack++;
                row[*slack_col] = F(1);
            }
            if (T::negative(b_[i])) {
                for (auto& v : row) v = -v;
                b_[i] = -b_[i];
            }
            if (needs_art[i]) {
                row[art] = F(1);
                basis_[i] = art++;
            } else {
                basis_[i] = *slack_col;
            }
        }
        rows_.clear();
    }

    bool is_artificial(std::size_t j) const { return j >= art_begin_; }

    void load_objective(const std::vector<F>& cost) {
        d_ = cost;
        obj_rhs_ = F(0);
        for (std::size_t i = 0; i < A_.size(); ++i) {
            const F& cb = cost[basis_[i]];
            if (T::is_zero(cb)) continue;
            for (std::size_t j = 0; j < ncols_; ++j) {
                if (!T::is_zero(A_[i][j])) d_[j] -= cb * A_[i][j];
            }
            obj_rhs_ -= cb * b_[i];
        }
        for (auto& v : d_) T::clean(v);
    }

    void pivot(std::size_t r, std::size_t c) {
        auto& prow = A_[r];
        const F piv = prow[c];
        std::vector<std::size_t> nz;
        nz.reserve(ncols_);
        for (std::size_t j = 0; j < ncols_; ++j) {
            if (T::is_zero(prow[j])) continue;
            prow[j] /= piv;
            nz.push_back(j);
        }
        prow[c] = F(1);
        b_[r] /= piv;
        for (std::size_t i = 0; i < A_.size(); ++i) {
            if (i == r) continue;
            auto& row = A_[i];
            if (T::is_zero(row[c])) continue;
            const F f = row[c];
            for (std::size_t j : nz) {
                row[j] -= f * prow[j];
                T::clean(row[j]);
            }
            row[c] = F(0);
            b_[i] -= f * b_[r];
            T::clean(b_[i]);
        }
        if (!T::is_zero(d_[c])) {
            const F f = d_[c];
            for (std::size_t j : nz) {
                d_[j] -= f * prow[j];
                T::clean(d_[j]);
            }
            d_[c] = F(0);
            obj_rhs_ -= f * b_[r];
        }
        basis_[r] = c;
    }

    enum class StepResult { Optimal, Pivoted, Unbounded };

    StepResult step(bool allow_artificial) {
        std::optional<std::size_t> enter;
        for (std::size_t j = 0; j < ncols_; ++j) {
            if (!allow_artificial && is_artificial(j)) continue;
            if (T::negative(d_[j])) {
                enter = j;
                break;
            }
        }
        if (!enter) return StepResult::Optimal;
        const std::size_t c = *enter;
        std::optional<std::size_t> leave;
        F best_ratio(0);
        for (std::size_t i = 0; i < A_.size(); ++i) {
            if (!T::positive(A_[i][c])) continue;
            F ratio = b_[i] / A_[i][c];
            if (!leave || T::less(ratio, best_ratio) ||
                (T::eq(ratio, best_ratio) && basis_[i] < basis_[*leave])) {
                leave = i;
                best_ratio = std::move(ratio);
            }
        }
        if (!leave) return StepResult::Unbounded;
        pivot(*leave, c);
        return StepResult::Pivoted;
    }

    std::size_t iteration_limit() const {
        if constexpr (T::exact) return std::numeric_limits<std::size_t>::max();
        return 50000 + 200 * (ncols_ + A_.size());
    }

    bool phase_one() {
        bool any_art = false;
        for (std::size_t c : basis_) any_art = any_art || is_artificial(c);
        if (!any_art) return true;
        std::vector<F> cost(ncols_, F(0));
        for (std::size_t j = art_begin_; j < ncols_; ++j) cost[j] = F(1);
        load_objective(cost);
        std::size_t iters = 0;
        while (true) {
            auto r = step(true);
            if (r == StepResult::Optimal) break;
            if (r == StepResult::Unbounded) throw NumericalFailure("phase one reported unboundedness");
            if (++iters > iteration_limit()) throw NumericalFailure("simplex iteration limit reached in phase one");
        }
        if (T::positive(-obj_rhs_)) return false;
        // Drive remaining artificials out of the basis; drop redundant rows.
        for (std::size_t i = 0; i < A_.size();) {
            if (!is_artificial(basis_[i])) {
                ++i;
                continue;
            }
            std::optional<std::size_t> col;
            for (std::size_t j = 0; j < art_begin_; ++j) {
                if (!T::is_zero(A_[i][j])) {
                    col = j;
                    break;
                }
            }
            if (col) {
                pivot(i, *col);
                ++i;
            } else {
                A_.erase(A_.begin() + static_cast<std::ptrdiff_t>(i));
                b_.erase(b_.begin() + static_cast<std::ptrdiff_t>(i));
                basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
            }
        }
        return true;
    }

    bool phase_two() {
        std::vector<F> cost(ncols_, F(0));
        const bool maximize = p_.sense == Sense::Max;
        for (std::size_t j = 0; j < p_.objective.size(); ++j) {
            F c = maximize ? -p_.objective[j] : p_.objective[j];
            const ColumnMap& cm = map_[j];
            if (cm.sign > 0) cost[cm.pos] += c; else cost[cm.pos] -= c;
            if (cm.neg) cost[*cm.neg] -= c;
        }
        load_objective(cost);
        std::size_t iters = 0;
        while (true) {
            auto r = step(false);
            if (r == StepResult::Optimal) return true;
            if (r == StepResult::Unbounded) return false;
            if (++iters > iteration_limit()) throw NumericalFailure("simplex iteration limit reached in phase two");
        }
    }

    std::vector<F> extract() const {
        std::vector<F> y(ncols_, F(0));
        for (std::size_t i = 0; i < A_.size(); ++i) y[basis_[i]] = b_[i];
        std::vector<F> x(map_.size(), F(0));
        for (std::size_t j = 0; j < map_.size(); ++j) {
            const ColumnMap& cm = map_[j];
            F v = cm.sign > 0 ? cm.offset + y[cm.pos] : cm.offset - y[cm.pos];
            if (cm.neg) v -= y[*cm.neg];
            x[j] = v;
        }
        return x;
    }

    void verify_residuals(const std::vector<F>& x) const {
        constexpr double tol = 1e-6;
        auto dot = [&](const Row<F>& r) {
            F s(0);
            for (std::size_t j = 0; j < x.size(); ++j) s += r.coeffs[j] * x[j];
            return s;
        };
        for (std::size_t i = 0; i < p_.eq_rows.size(); ++i) {
            double res = T::to_double(dot(p_.eq_rows[i]) - p_.eq_rows[i].rhs);
            if (res > tol || res < -tol)
                throw NumericalFailure("equality row " + std::to_string(i) + " violated after solve");
        }
        for (std::size_t i = 0; i < p_.ub_rows.size(); ++i) {
            double res = T::to_double(dot(p_.ub_rows[i]) - p_.ub_rows[i].rhs);
            if (res > tol) throw NumericalFailure("inequality row " + std::to_string(i) + " violated after solve");
        }
    }

    const Problem<F>& p_;
    std::vector<ColumnMap> map_;
    std::vector<std::pair<std::size_t, F>> upper_rows_;
    std::vector<StdRow> rows_;
    std::size_t nstruct_ = 0;
    bool trivially_infeasible_ = false;

    std::vector<std::vector<F>> A_;
    std::vector<F> b_;
    std::vector<std::size_t> basis_;
    std::vector<F> d_;
    F obj_rhs_ = F(0);
    std::size_t art_begin_ = 0;
    std::size_t ncols_ = 0;
};

}  // namespace detail

/// Solves the LP exactly (Rational) or within 1e-9 (double). Deterministic:
/// Bland's rule fixes the pivot sequence for a given input.
template <Field F>
Solution<F> solve(const Problem<F>& problem) {
    detail::Simplex<F> s(problem);
    return s.solve(false);
}

template <Field F>
Feasibility<F> check_feasible(const Problem<F>& problem) {
    detail::Simplex<F> s(problem);
    auto sol = s.solve(true);
    Feasibility<F> out;
    out.feasible = sol.optimal();
    if (out.feasible) out.witness = std::move(sol.x);
    return out;
}

}  // namespace amerdual::lp
