#pragma once

#include "amerdual/strategy.hpp"

#include <optional>

namespace amerdual {

/// A strategy whose gain is >= 0 on every scenario and sums to >= 1.
template <Field F>
struct Arbitrage {
    PredictableStrategy<F> H;
    std::vector<F> h;
};

template <Field F>
struct EnlargedArbitrage {
    EnlargedStrategy<F> strategy;
};

/// Pathwise no-arbitrage check: searches the cone {gain >= 0 everywhere,
/// total gain >= 1}. Statics enter through their normalized payoffs.
template <Field F>
std::optional<Arbitrage<F>> check_na(const FiniteFilteredMarket<F>& m) {
    lp::Builder<F> b;
    detail::PredictableVars<F> H(b, detail::atom_counts(m), m.dim());
    auto h = detail::add_static_vars(b, m.num_statics());
    std::vector<typename lp::Builder<F>::Term> total;
    for (std::size_t p = 0; p < m.num_paths(); ++p) {
        std::vector<typename lp::Builder<F>::Term> terms;
        H.append_gain(terms, m, p, [&](int k) { return m.atom_position(m.ancestor(p, k)); });
        detail::append_static_gain(terms, m, h, p);
        total.insert(total.end(), terms.begin(), terms.end());
        b.add_ge(std::move(terms), F(0));
    }
    b.add_ge(std::move(total), F(1));
    auto r = lp::check_feasible(b.build());
    if (!r.feasible) return std::nullopt;
    return Arbitrage<F>{H.extract(*r.witness), detail::pick(*r.witness, h)};
}

/// Same check on Ω̄ with strategies predictable for the enlarged filtration.
template <Field F>
std::optional<EnlargedArbitrage<F>> check_na_enlarged(const EnlargedMarket<F>& mb) {
    const auto& m = mb.base();
    lp::Builder<F> b;
    detail::PredictableVars<F> H(b, detail::atom_counts(mb), m.dim());
    auto h = detail::add_static_vars(b, m.num_statics());
    std::vector<typename lp::Builder<F>::Term> total;
    for (std::size_t pt = 0; pt < mb.num_points(); ++pt) {
        const std::size_t path = mb.point(pt).first;
        std::vector<typename lp::Builder<F>::Term> terms;
        H.append_gain(terms, m, path, [&](int k) { return mb.atom_of(pt, k); });
        detail::append_static_gain(terms, m, h, path);
        total.insert(total.end(), terms.begin(), terms.end());
        b.add_ge(std::move(terms), F(0));
    }
    b.add_ge(std::move(total), F(1));
    auto r = lp::check_feasible(b.build());
    if (!r.feasible) return std::nullopt;
    return EnlargedArbitrage<F>{{H.extract(*r.witness), detail::pick(*r.witness, h)}};
}

}  // namespace amerdual
