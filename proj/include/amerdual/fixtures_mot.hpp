#pragma once

#include "amerdual/mot.hpp"

#include <string>

namespace amerdual::fixtures {

template <Field F>
struct MotFixture {
    std::string name;
    std::string description;
    MotMarket<F> mot;
    AmericanPayoff<F> payoff;
    EnlargedMeasure<F> q0;          // stops at 2 on |S_2| = 1 and at 1 on |S_2| = 2
    EnlargedMeasure<F> q0_literal;  // the reverse assignment, worth 1/2
};

/// μ_1 = δ_0 at t = 1, μ_2 uniform on {-2,-1,1,2} at t = 2. Φ_1 = 1,
/// Φ_2 = 2 on |S_2| = 1 and 0 on |S_2| = 2.
///
/// Expected: primal 3/2, weak dual 3/2 (attained by q0), strong dual 1; q0
/// is not pseudo-stopping.
template <Field F>
MotFixture<F> mot_example() {
    MarginalSpec<F> spec;
    spec.times = {1, 2};
    spec.s0 = {F(0)};
    spec.marginals = {{{{F(0)}, F(1)}},
                      {{{F(-2)}, lit<F>(1, 4)}, {{F(-1)}, lit<F>(1, 4)}, {{F(1)}, lit<F>(1, 4)}, {{F(2)}, lit<F>(1, 4)}}};
    auto mm = build_mot_market(spec, "mot-example");
    const std::size_t n = mm.market.num_paths();
    AmericanPayoff<F> phi = AmericanPayoff<F>::constant(2, n, F(1));
    for (std::size_t p = 0; p < n; ++p) {
        const F s = mm.market.asset(p, 2, 0);
        phi.values[1][p] = (s == F(1) || s == F(-1)) ? F(2) : F(0);
    }
    auto mb = enlarge(mm.market);
    EnlargedMeasure<F> q0{std::vector<F>(mb.num_points(), F(0))}, lit_q0 = q0;
    for (std::size_t p = 0; p < n; ++p) {
        const F s = mm.market.asset(p, 2, 0);
        const bool inner = s == F(1) || s == F(-1);
        q0.weights[mb.point_index(p, inner ? 2 : 1)] = lit<F>(1, 4);
        lit_q0.weights[mb.point_index(p, inner ? 1 : 2)] = lit<F>(1, 4);
    }
    return {"mot-example",
            "mu_1 = delta_0, mu_2 uniform on {-2,-1,1,2}; Phi_1 = 1, Phi_2 = 2*1{|S_2|=1}",
            std::move(mm), std::move(phi), std::move(q0), std::move(lit_q0)};
}

}  // namespace amerdual::fixtures
