#pragma once

#include "amerdual/strategy.hpp"

#include <string>
#include <vector>

namespace amerdual {

template <Field F>
struct EuropeanHedge {
    F value;
    PredictableStrategy<F> strategy;
    std::vector<F> h;
};

template <Field F>
struct AmericanHedge {
    F value;
    AmericanStrategy<F> strategy;
};

template <Field F>
struct EnlargedHedge {
    F value;
    EnlargedStrategy<F> strategy;
};

/// Superhedging price of ξ: min x with x + (H∘S)_N + h·g ≥ ξ on every path.
template <Field F>
EuropeanHedge<F> price_european(const FiniteFilteredMarket<F>& m, const std::vector<ExtReal<F>>& xi, bool use_statics) {
    if (xi.size() != m.num_paths()) throw MalformedInput("claim does not cover every path");
    lp::Builder<F> b(lp::Sense::Min);
    const std::size_t x = b.add_variable(lp::Bound<F>::free(), F(1));
    detail::PredictableVars<F> H(b, detail::atom_counts(m), m.dim());
    auto h = detail::add_static_vars(b, use_statics ? m.num_statics() : 0);
    for (std::size_t p = 0; p < m.num_paths(); ++p) {
        std::vector<typename lp::Builder<F>::Term> terms{{x, F(1)}};
        H.append_gain(terms, m, p, [&](int k) { return m.atom_position(m.ancestor(p, k)); });
        detail::append_static_gain(terms, m, h, p);
        b.add_ge(std::move(terms), xi[p]);
    }
    auto sol = lp::solve(b.build());
    if (sol.status == lp::Status::Unbounded) throw UnboundedBelow("price_european: superhedging problem is unbounded below");
    if (!sol.optimal()) throw NumericalFailure("price_european: LP reported infeasible");
    return {sol.x[x], H.extract(sol.x), use_statics ? detail::pick(sol.x, h) : std::vector<F>(m.num_statics(), F(0))};
}

/// American superhedging price: one strategy per exercise date, all agreeing
/// up to that date, each dominating its payoff Φ_j on every path.
template <Field F>
AmericanHedge<F> price_american(const FiniteFilteredMarket<F>& m, const AmericanPayoff<F>& phi, bool use_statics) {
    check_payoff(m, phi);
    const int N = m.horizon();
    lp::Builder<F> b(lp::Sense::Min);
    const std::size_t x = b.add_variable(lp::Bound<F>::free(), F(1));
    std::vector<detail::PredictableVars<F>> branch;
    for (int j = 1; j <= N; ++j) branch.emplace_back(b, detail::atom_counts(m), m.dim());
    auto h = detail::add_static_vars(b, use_statics ? m.num_statics() : 0);

    for (int j = 1; j < N; ++j) {
        for (int i = 1; i <= j; ++i) {
            const std::size_t natoms = m.atoms(i - 1).size();
            for (std::size_t at = 0; at < natoms; ++at) {
                for (std::size_t a = 0; a < m.dim(); ++a) {
                    b.add_eq({{branch[static_cast<std::size_t>(j - 1)].var(i, at, a), F(1)},
                              {branch[static_cast<std::size_t>(j)].var(i, at, a), F(-1)}},
                             F(0));
                }
            }
        }
    }
    for (int j = 1; j <= N; ++j) {
        for (std::size_t p = 0; p < m.num_paths(); ++p) {
            const auto& target = phi.at(j, p);
            if (!target) continue;
            std::vector<typename lp::Builder<F>::Term> terms{{x, F(1)}};
            branch[static_cast<std::size_t>(j - 1)].append_gain(terms, m, p,
                                                                [&](int k) { return m.atom_position(m.ancestor(p, k)); });
            detail::append_static_gain(terms, m, h, p);
            b.add_ge(std::move(terms), target);
        }
    }
    auto sol = lp::solve(b.build());
    if (sol.status == lp::Status::Unbounded) throw UnboundedBelow("price_american: superhedging problem is unbounded below");
    if (!sol.optimal()) throw NumericalFailure("price_american: LP reported infeasible");
    AmericanHedge<F> out{sol.x[x], {}};
    for (const auto& br : branch) out.strategy.branches.push_back(br.extract(sol.x));
    out.strategy.h = use_statics ? detail::pick(sol.x, h) : std::vector<F>(m.num_statics(), F(0));
    return out;
}

/// European superhedging price of Φ(ω,θ) = Φ_θ(ω) on Ω̄.
template <Field F>
EnlargedHedge<F> price_european_enlarged(const EnlargedMarket<F>& mb, const AmericanPayoff<F>& phi, bool use_statics) {
    const auto& m = mb.base();
    check_payoff(m, phi);
    lp::Builder<F> b(lp::Sense::Min);
    const std::size_t x = b.add_variable(lp::Bound<F>::free(), F(1));
    detail::PredictableVars<F> H(b, detail::atom_counts(mb), m.dim());
    auto h = detail::add_static_vars(b, use_statics ? m.num_statics() : 0);
    for (std::size_t pt = 0; pt < mb.num_points(); ++pt) {
        auto [path, theta] = mb.point(pt);
        const auto& target = phi.at(theta, path);
        if (!target) continue;
        std::vector<typename lp::Builder<F>::Term> terms{{x, F(1)}};
        H.append_gain(terms, m, path, [&](int k) { return mb.atom_of(pt, k); });
        detail::append_static_gain(terms, m, h, path);
        b.add_ge(std::move(terms), target);
    }
    auto sol = lp::solve(b.build());
    if (sol.status == lp::Status::Unbounded) {
        throw UnboundedBelow("price_european_enlarged: superhedging problem is unbounded below");
    }
    if (!sol.optimal()) throw NumericalFailure("price_european_enlarged: LP reported infeasible");
    return {sol.x[x], {H.extract(sol.x), use_statics ? detail::pick(sol.x, h) : std::vector<F>(m.num_statics(), F(0))}};
}

}  // namespace amerdual
