#pragma once

#include "amerdual/hedging.hpp"
#include "amerdual/parallel.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace amerdual {

/// τ(ω) ∈ {1..N} per path; adapted when {τ = k} is a union of time-k atoms.
struct StoppingRule {
    std::vector<int> tau;
};

/// ΔV_k per time-k atom, k = 1..N: dV[k-1][atom position].
template <Field F>
struct RandomizedStoppingRule {
    std::vector<std::vector<F>> dV;
};

template <Field F>
struct CalibratedSup {
    ExtReal<F> value;                      // -inf when every calibrated measure charges a -inf point
    std::optional<PathMeasure<F>> measure;  // present iff value is finite
};

template <Field F>
struct StrongValue {
    ExtReal<F> value;
    StoppingRule tau;
    std::optional<PathMeasure<F>> measure;
};

template <Field F>
struct WeakValue {
    ExtReal<F> value;
    std::optional<EnlargedMeasure<F>> measure;
};

template <Field F>
struct GapReport {
    F primal;
    F weak_dual;
    std::optional<F> strong_dual;  // absent when enumeration was skipped
    std::optional<F> gap_weak_strong;
    bool duality_holds = false;
};

template <Field F>
bool is_adapted(const FiniteFilteredMarket<F>& m, const StoppingRule& r) {
    if (r.tau.size() != m.num_paths()) return false;
    for (int t : r.tau) if (t < 1 || t > m.horizon()) return false;
    for (int k = 1; k <= m.horizon(); ++k) {
        for (std::size_t node : m.atoms(k)) {
            auto [b, e] = m.path_range(node);
            bool any = false, all = true;
            for (std::size_t p = b; p < e; ++p) {
                // {τ = k} ∩ node must be all or nothing; so must {τ <= k}.
                any = any || r.tau[p] <= k;
                all = all && r.tau[p] <= k;
            }
            if (any != all) return false;
        }
    }
    return true;
}

/// ω ↦ Φ_{τ(ω)}(ω).
template <Field F>
std::vector<ExtReal<F>> stopped_payoff(const AmericanPayoff<F>& phi, const StoppingRule& r) {
    std::vector<ExtReal<F>> xi(r.tau.size());
    for (std::size_t p = 0; p < xi.size(); ++p) xi[p] = phi.at(r.tau[p], p);
    return xi;
}

/// E^Q[ξ] with 0·(-inf) = 0.
template <Field F>
ExtReal<F> expectation(const PathMeasure<F>& q, const std::vector<ExtReal<F>>& xi) {
    F s(0);
    for (std::size_t p = 0; p < xi.size(); ++p) {
        if (field_traits<F>::is_zero(q.weights[p])) continue;
        if (!xi[p]) return std::nullopt;
        s += q.weights[p] * *xi[p];
    }
    return s;
}

template <Field F>
ExtReal<F> expectation(const EnlargedMeasure<F>& q, const std::vector<ExtReal<F>>& xi) {
    return expectation(PathMeasure<F>{q.weights}, xi);
}

/// Ω-marginal of an enlarged measure.
template <Field F>
PathMeasure<F> marginal(const EnlargedMarket<F>& mb, const EnlargedMeasure<F>& qb) {
    PathMeasure<F> q{std::vector<F>(mb.base().num_paths(), F(0))};
    for (std::size_t pt = 0; pt < mb.num_points(); ++pt) q.weights[mb.point(pt).first] += qb.weights[pt];
    return q;
}

/// The law of (ω, τ(ω)) under Q.
template <Field F>
EnlargedMeasure<F> lift(const EnlargedMarket<F>& mb, const PathMeasure<F>& q, const StoppingRule& r) {
    EnlargedMeasure<F> out{std::vector<F>(mb.num_points(), F(0))};
    for (std::size_t p = 0; p < q.weights.size(); ++p) out.weights[mb.point_index(p, r.tau[p])] = q.weights[p];
    return out;
}

namespace detail {

/// Adds q ≥ 0 on the allowed paths, mass 1, martingale and (optionally)
/// calibration constraints. Returns the variable index per path (nullopt for
/// paths forced to zero).
template <Field F>
std::vector<std::optional<std::size_t>> add_martingale_measure(lp::Builder<F>& b, const FiniteFilteredMarket<F>& m,
                                                               const std::vector<bool>& allowed, bool calibrate,
                                                               std::optional<std::size_t> subtree = std::nullopt) {
    const std::size_t top = subtree.value_or(m.root());
    const auto [first, last] = m.path_range(top);
    std::vector<std::optional<std::size_t>> var(m.num_paths());
    std::vector<typename lp::Builder<F>::Term> mass;
    for (std::size_t p = first; p < last; ++p) {
        if (!allowed[p]) continue;
        var[p] = b.add_variable();
        mass.emplace_back(*var[p], F(1));
    }
    b.add_eq(std::move(mass), F(1));
    for (int k = m.time(top) + 1; k <= m.horizon(); ++k) {
        for (std::size_t node : m.atoms(k - 1)) {
            auto [lo, hi] = m.path_range(node);
            if (lo < first || hi > last) continue;
            for (std::size_t a = 0; a < m.dim(); ++a) {
                std::vector<typename lp::Builder<F>::Term> row;
                for (std::size_t p = lo; p < hi; ++p) {
                    if (!var[p]) continue;
                    F inc = m.increment(p, k, a);
                    if (!field_traits<F>::is_zero(inc)) row.emplace_back(*var[p], std::move(inc));
                }
                if (!row.empty()) b.add_eq(std::move(row), F(0));
            }
        }
    }
    if (calibrate) {
        for (std::size_t s = 0; s < m.num_statics(); ++s) {
            std::vector<typename lp::Builder<F>::Term> row;
            for (std::size_t p = 0; p < m.num_paths(); ++p) {
                if (!var[p]) continue;
                F g = m.static_net(s, p);
                if (!field_traits<F>::is_zero(g)) row.emplace_back(*var[p], std::move(g));
            }
            b.add_eq(std::move(row), F(0));
        }
    }
    return var;
}

template <Field F>
PathMeasure<F> read_measure(const std::vector<std::optional<std::size_t>>& var, const std::vector<F>& x) {
    PathMeasure<F> q{std::vector<F>(var.size(), F(0))};
    for (std::size_t p = 0; p < var.size(); ++p) if (var[p]) q.weights[p] = x[*var[p]];
    return q;
}

template <Field F>
CalibratedSup<F> sup_restricted(const FiniteFilteredMarket<F>& m, const std::vector<ExtReal<F>>& xi, bool calibrate) {
    std::vector<bool> allowed(m.num_paths());
    for (std::size_t p = 0; p < xi.size(); ++p) allowed[p] = xi[p].has_value();
    lp::Builder<F> b(lp::Sense::Max);
    auto var = add_martingale_measure(b, m, allowed, calibrate);
    for (std::size_t p = 0; p < xi.size(); ++p) if (var[p]) b.set_cost(*var[p], *xi[p]);
    auto sol = lp::solve(b.build());
    if (sol.status == lp::Status::Infeasible) return {std::nullopt, std::nullopt};
    if (!sol.optimal()) throw NumericalFailure("sup over a probability simplex reported unbounded");
    return {*sol.objective_value, read_measure(var, sol.x)};
}

template <Field F>
void require_calibrated_measure(const FiniteFilteredMarket<F>& m) {
    lp::Builder<F> b;
    add_martingale_measure(b, m, std::vector<bool>(m.num_paths(), true), true);
    if (!lp::check_feasible(b.build()).feasible) {
        throw NoCalibratedMeasure("no martingale measure is consistent with the static option prices");
    }
}

inline std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::numeric_limits<std::uint64_t>::max();
    return a * b;
}

inline std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
    return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max() : a + b;
}

}  // namespace detail

/// sup over calibrated martingale measures of E^Q[ξ]. Paths where ξ = -inf
/// are excluded from the support; the value is -inf if that leaves no
/// calibrated measure.
template <Field F>
CalibratedSup<F> sup_calibrated(const FiniteFilteredMarket<F>& m, const std::vector<ExtReal<F>>& xi) {
    if (xi.size() != m.num_paths()) throw MalformedInput("claim does not cover every path");
    auto r = detail::sup_restricted(m, xi, true);
    if (!r.value) detail::require_calibrated_measure(m);
    return r;
}

/// Number of adapted stopping rules with values in {1..N} (saturating).
template <Field F>
std::uint64_t count_stopping_times(const FiniteFilteredMarket<F>& m) {
    std::function<std::uint64_t(std::size_t)> rules = [&](std::size_t node) -> std::uint64_t {
        if (m.time(node) == m.horizon()) return 1;
        std::uint64_t prod = 1;
        for (std::size_t c : m.children(node)) prod = detail::saturating_mul(prod, rules(c));
        return m.time(node) == 0 ? prod : detail::saturating_add(prod, 1);
    };
    return rules(m.root());
}

/// Visits every adapted stopping rule in depth-first order: at each node the
/// rule "stop here" comes first, then all combinations of the children's
/// rules with the first child varying slowest.
template <Field F, class Visit>
void for_each_stopping_time(const FiniteFilteredMarket<F>& m, std::uint64_t cap, Visit visit) {
    const std::uint64_t count = count_stopping_times(m);
    if (count > cap) throw EnumerationCapExceeded(count, cap);
    StoppingRule r{std::vector<int>(m.num_paths(), m.horizon())};
    std::vector<std::size_t> pending(m.children(m.root()).rbegin(), m.children(m.root()).rend());
    std::function<void()> rec = [&]() {
        if (pending.empty()) {
            visit(static_cast<const StoppingRule&>(r));
            return;
        }
        const std::size_t node = pending.back();
        pending.pop_back();
        auto [b, e] = m.path_range(node);
        const int k = m.time(node);
        for (std::size_t p = b; p < e; ++p) r.tau[p] = k;
        rec();
        if (k < m.horizon()) {
            const auto& ch = m.children(node);
            pending.insert(pending.end(), ch.rbegin(), ch.rend());
            rec();
            pending.resize(pending.size() - ch.size());
        }
        pending.push_back(node);
    };
    rec();
}

template <Field F>
std::vector<StoppingRule> enumerate_stopping_times(const FiniteFilteredMarket<F>& m, std::uint64_t cap = 1000000) {
    std::vector<StoppingRule> out;
    for_each_stopping_time(m, cap, [&](const StoppingRule& r) { out.push_back(r); });
    return out;
}

/// sup over calibrated Q and stopping rules τ of E^Q[Φ_τ], by enumeration.
/// The first maximizing rule in enumeration order is returned.
template <Field F>
StrongValue<F> strong_value(const FiniteFilteredMarket<F>& m, const AmericanPayoff<F>& phi,
                            std::uint64_t cap = 1000000) {
    check_payoff(m, phi);
    detail::require_calibrated_measure(m);
    constexpr std::size_t batch = 256;
    StrongValue<F> best{std::nullopt, {}, std::nullopt};
    bool have = false;
    std::vector<StoppingRule> rules;
    auto flush = [&] {
        std::vector<CalibratedSup<F>> vals(rules.size());
        parallel_for(rules.size(), [&](std::size_t i) { vals[i] = detail::sup_restricted(m, stopped_payoff(phi, rules[i]), true); });
        for (std::size_t i = 0; i < rules.size(); ++i) {
            if (!have || ext_less<F>(best.value, vals[i].value)) {
                best = {vals[i].value, rules[i], vals[i].measure};
                have = true;
            }
        }
        rules.clear();
    };
    for_each_stopping_time(m, cap, [&](const StoppingRule& r) {
        rules.push_back(r);
        if (rules.size() == batch) flush();
    });
    flush();
    return best;
}

namespace detail {

/// Weak-dual LP on Ω̄. With `restrict`, points where Φ = -inf are excluded and
/// the objective is E[Φ]; otherwise the objective is zero.
template <Field F>
struct WeakLp {
    lp::Builder<F> builder{lp::Sense::Max};
    std::vector<std::optional<std::size_t>> var;
};

template <Field F>
WeakLp<F> weak_lp(const EnlargedMarket<F>& mb, const std::vector<ExtReal<F>>& values, bool restrict) {
    const auto& m = mb.base();
    WeakLp<F> w;
    auto& b = w.builder;
    w.var.resize(mb.num_points());
    std::vector<typename lp::Builder<F>::Term> mass;
    for (std::size_t pt = 0; pt < mb.num_points(); ++pt) {
        if (restrict && !values[pt]) continue;
        w.var[pt] = b.add_variable(lp::Bound<F>::nonneg(), restrict ? *values[pt] : F(0));
        mass.emplace_back(*w.var[pt], F(1));
    }
    b.add_eq(std::move(mass), F(1));
    for (int k = 1; k <= m.horizon(); ++k) {
        for (std::size_t at = 0; at < mb.atoms(k - 1).size(); ++at) {
            for (std::size_t a = 0; a < m.dim(); ++a) {
                std::vector<typename lp::Builder<F>::Term> row;
                for (std::size_t pt : mb.atom_points(k - 1, at)) {
                    if (!w.var[pt]) continue;
                    F inc = m.increment(mb.point(pt).first, k, a);
                    if (!field_traits<F>::is_zero(inc)) row.emplace_back(*w.var[pt], std::move(inc));
                }
                if (!row.empty()) b.add_eq(std::move(row), F(0));
            }
        }
    }
    for (std::size_t s = 0; s < m.num_statics(); ++s) {
        std::vector<typename lp::Builder<F>::Term> row;
        for (std::size_t pt = 0; pt < mb.num_points(); ++pt) {
            if (!w.var[pt]) continue;
            F g = m.static_net(s, mb.point(pt).first);
            if (!field_traits<F>::is_zero(g)) row.emplace_back(*w.var[pt], std::move(g));
        }
        b.add_eq(std::move(row), F(0));
    }
    return w;
}

template <Field F>
EnlargedMeasure<F> read_enlarged(const std::vector<std::optional<std::size_t>>& var, const std::vector<F>& x) {
    EnlargedMeasure<F> q{std::vector<F>(var.size(), F(0))};
    for (std::size_t pt = 0; pt < var.size(); ++pt) if (var[pt]) q.weights[pt] = x[*var[pt]];
    return q;
}

}  // namespace detail

/// sup over calibrated martingale measures on Ω̄ of E[Φ(ω,θ)].
template <Field F>
WeakValue<F> weak_value(const EnlargedMarket<F>& mb, const AmericanPayoff<F>& phi) {
    check_payoff(mb.base(), phi);
    auto values = payoff_on_points(mb, phi);
    auto w = detail::weak_lp(mb, values, true);
    auto sol = lp::solve(w.builder.build());
    if (sol.status == lp::Status::Infeasible) {
        if (!lp::check_feasible(detail::weak_lp(mb, values, false).builder.build()).feasible) {
            throw NoCalibratedMeasure("no calibrated martingale measure exists on the enlarged space");
        }
        return {std::nullopt, std::nullopt};
    }
    if (!sol.optimal()) throw NumericalFailure("weak dual LP reported unbounded");
    return {*sol.objective_value, detail::read_enlarged(w.var, sol.x)};
}

/// Σ_ω q(ω) Σ_k Φ_k(ω) ΔV_k(ω); a -inf payoff met with positive weight gives -inf.
template <Field F>
ExtReal<F> randomized_expectation(const FiniteFilteredMarket<F>& m, const PathMeasure<F>& q,
                                  const RandomizedStoppingRule<F>& V, const AmericanPayoff<F>& phi) {
    check_payoff(m, phi);
    if (V.dV.size() != static_cast<std::size_t>(m.horizon())) throw MalformedInput("randomized rule has wrong horizon");
    for (std::size_t p = 0; p < m.num_paths(); ++p) {
        F total(0);
        for (int k = 1; k <= m.horizon(); ++k) {
            const F& d = V.dV[static_cast<std::size_t>(k - 1)].at(m.atom_position(m.ancestor(p, k)));
            if (field_traits<F>::negative(d)) throw MalformedInput("randomized rule has a negative increment");
            total += d;
        }
        if (!field_traits<F>::eq(total, F(1))) throw MalformedInput("randomized rule increments do not sum to 1");
    }
    F s(0);
    for (std::size_t p = 0; p < m.num_paths(); ++p) {
        if (field_traits<F>::is_zero(q.weights[p])) continue;
        for (int k = 1; k <= m.horizon(); ++k) {
            const F& d = V.dV[static_cast<std::size_t>(k - 1)][m.atom_position(m.ancestor(p, k))];
            if (field_traits<F>::is_zero(d)) continue;
            const auto& v = phi.at(k, p);
            if (!v) return std::nullopt;
            s += q.weights[p] * d * *v;
        }
    }
    return s;
}

template <Field F>
RandomizedStoppingRule<F> point_mass(const FiniteFilteredMarket<F>& m, const StoppingRule& r) {
    RandomizedStoppingRule<F> V;
    for (int k = 1; k <= m.horizon(); ++k) {
        V.dV.emplace_back();
        for (std::size_t node : m.atoms(k)) {
            const std::size_t p = m.path_range(node).first;
            const bool stop_here = r.tau[p] == k;
            V.dV.back().push_back(stop_here ? F(1) : F(0));
        }
    }
    return V;
}

template <Field F>
struct RandomizedOptimum {
    ExtReal<F> value;
    std::optional<RandomizedStoppingRule<F>> rule;
};

/// max over randomized stopping rules of randomized_expectation for fixed Q (an LP in ΔV).
template <Field F>
RandomizedOptimum<F> max_randomized(const FiniteFilteredMarket<F>& m, const PathMeasure<F>& q,
                                    const AmericanPayoff<F>& phi) {
    check_payoff(m, phi);
    const int N = m.horizon();
    lp::Builder<F> b(lp::Sense::Max);
    std::vector<std::vector<std::size_t>> var(static_cast<std::size_t>(N));
    for (int k = 1; k <= N; ++k) {
        for (std::size_t node : m.atoms(k)) {
            auto [lo, hi] = m.path_range(node);
            F cost(0);
            bool forbidden = false;
            for (std::size_t p = lo; p < hi; ++p) {
                if (field_traits<F>::is_zero(q.weights[p])) continue;
                const auto& v = phi.at(k, p);
                if (!v) forbidden = true; else cost += q.weights[p] * *v;
            }
            var[static_cast<std::size_t>(k - 1)].push_back(
                b.add_variable(forbidden ? lp::Bound<F>::fixed(F(0)) : lp::Bound<F>::nonneg(), cost));
        }
    }
    for (std::size_t p = 0; p < m.num_paths(); ++p) {
        std::vector<typename lp::Builder<F>::Term> row;
        for (int k = 1; k <= N; ++k) row.emplace_back(var[static_cast<std::size_t>(k - 1)][m.atom_position(m.ancestor(p, k))], F(1));
        b.add_eq(std::move(row), F(1));
    }
    auto sol = lp::solve(b.build());
    if (sol.status == lp::Status::Infeasible) return {std::nullopt, std::nullopt};
    if (!sol.optimal()) throw NumericalFailure("randomized stopping LP reported unbounded");
    RandomizedStoppingRule<F> V;
    for (const auto& level : var) {
        V.dV.emplace_back();
        for (std::size_t v : level) V.dV.back().push_back(sol.x[v]);
    }
    return {*sol.objective_value, std::move(V)};
}

struct PseudoStoppingCertificate {
    enum class Kind { Martingale, Calibration, OptionalStopping };
    Kind kind;
    std::string detail;
};

template <Field F>
struct PseudoStoppingCheck {
    bool member = false;
    std::optional<PseudoStoppingCertificate> violated;
};

namespace detail {

template <Field F>
F atom_mass(const FiniteFilteredMarket<F>& m, const PathMeasure<F>& q, std::size_t node) {
    auto [b, e] = m.path_range(node);
    F s(0);
    for (std::size_t p = b; p < e; ++p) s += q.weights[p];
    return s;
}

template <Field F>
std::optional<PseudoStoppingCertificate> check_calibrated_martingale(const FiniteFilteredMarket<F>& m,
                                                                     const PathMeasure<F>& q) {
    for (int k = 1; k <= m.horizon(); ++k) {
        for (std::size_t node : m.atoms(k - 1)) {
            auto [b, e] = m.path_range(node);
            for (std::size_t a = 0; a < m.dim(); ++a) {
                F s(0);
                for (std::size_t p = b; p < e; ++p) s += q.weights[p] * m.increment(p, k, a);
                if (!field_traits<F>::is_zero(s)) {
                    return PseudoStoppingCertificate{
                        PseudoStoppingCertificate::Kind::Martingale,
                        "asset " + std::to_string(a) + " drifts by " + field_traits<F>::render(s) + " on node " +
                            std::to_string(m.node_id(node)) + " over step " + std::to_string(k)};
                }
            }
        }
    }
    for (std::size_t s = 0; s < m.num_statics(); ++s) {
        F v(0);
        for (std::size_t p = 0; p < m.num_paths(); ++p) v += q.weights[p] * m.static_net(s, p);
        if (!field_traits<F>::is_zero(v)) {
            return PseudoStoppingCertificate{PseudoStoppingCertificate::Kind::Calibration,
                                             "static " + std::to_string(s) + " has expected net payoff " +
                                                 field_traits<F>::render(v)};
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Membership of Q̄ in the pseudo-stopping set: S is a martingale and the
/// statics are calibrated under the Ω-marginal, and E[M_T] = M_0 for every
/// martingale M_k = Q(ω' | F_k).
template <Field F>
PseudoStoppingCheck<F> is_pseudo_stopping(const EnlargedMarket<F>& mb, const EnlargedMeasure<F>& qb) {
    const auto& m = mb.base();
    auto q = marginal(mb, qb);
    if (auto c = detail::check_calibrated_martingale(m, q)) return {false, c};
    std::vector<F> node_mass(m.num_nodes(), F(0));
    for (std::size_t node = 0; node < m.num_nodes(); ++node) node_mass[node] = detail::atom_mass(m, q, node);
    for (std::size_t target = 0; target < m.num_paths(); ++target) {
        F lhs(0);
        for (std::size_t pt = 0; pt < mb.num_points(); ++pt) {
            if (field_traits<F>::is_zero(qb.weights[pt])) continue;
            auto [p, theta] = mb.point(pt);
            const std::size_t node = m.ancestor(p, theta);
            if (m.ancestor(target, theta) != node) continue;
            const F& mass = node_mass[node];
            lhs += qb.weights[pt] * (q.weights[target] / mass);
        }
        if (!field_traits<F>::eq(lhs, q.weights[target])) {
            return {false, PseudoStoppingCertificate{
                               PseudoStoppingCertificate::Kind::OptionalStopping,
                               "martingale Q(path " + std::to_string(m.path_id(target)) + " | F_k) has E[M_T] = " +
                                   field_traits<F>::render(lhs) + " but M_0 = " +
                                   field_traits<F>::render(q.weights[target])}};
        }
    }
    return {true, std::nullopt};
}

/// Q̄[T > k | F_n] = Q̄[T > k | F_k] on every charged time-n atom, k <= n.
template <Field F>
bool is_immersion(const EnlargedMarket<F>& mb, const EnlargedMeasure<F>& qb) {
    const auto& m = mb.base();
    auto q = marginal(mb, qb);
    auto later = [&](std::size_t node, int k) {
        auto [b, e] = m.path_range(node);
        F s(0);
        for (std::size_t p = b; p < e; ++p)
            for (int th = k + 1; th <= m.horizon(); ++th) s += qb.weights[mb.point_index(p, th)];
        return s;
    };
    for (int k = 0; k < m.horizon(); ++k) {
        for (int n = k; n <= m.horizon(); ++n) {
            for (std::size_t node : m.atoms(n)) {
                F mass = detail::atom_mass(m, q, node);
                if (field_traits<F>::is_zero(mass)) continue;
                std::size_t up = node;
                while (m.time(up) > k) up = *m.parent(up);
                F up_mass = detail::atom_mass(m, q, up);
                if (!field_traits<F>::eq(later(node, k) / mass, later(up, k) / up_mass)) return false;
            }
        }
    }
    return true;
}

/// Primal, weak and strong values side by side. Throws if the ordering
/// strong <= weak <= primal fails, which would indicate a solver defect.
template <Field F>
GapReport<F> duality_gap(const FiniteFilteredMarket<F>& m, const AmericanPayoff<F>& phi, std::uint64_t cap = 1000000) {
    auto strong = strong_value(m, phi, cap);
    auto weak = weak_value(enlarge(m), phi);
    F primal = price_american(m, phi, true).value;
    if (!strong.value || !weak.value) throw NoCalibratedMeasure("payoff is -inf under every calibrated measure");
    const F& s = *strong.value;
    const F& w = *weak.value;
    if (field_traits<F>::less(w, s) || field_traits<F>::less(primal, w)) {
        throw NumericalFailure("dual ordering violated: strong " + field_traits<F>::render(s) + ", weak " +
                               field_traits<F>::render(w) + ", primal " + field_traits<F>::render(primal));
    }
    return {primal, w, s, w - s, field_traits<F>::eq(w, primal)};
}

}  // namespace amerdual
