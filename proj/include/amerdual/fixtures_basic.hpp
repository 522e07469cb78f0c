#pragma once

// Tree-market fixtures shared by tests, samples and the CLI.

#include "amerdual/market.hpp"

#include <string>
#include <vector>

namespace amerdual::fixtures {

template <Field F>
struct Fixture {
    std::string name;
    std::string description;
    FiniteFilteredMarket<F> market;
    AmericanPayoff<F> payoff;
};

/// One asset, S_0 = S_1 = 0, S_2 ∈ {-2,-1,1,2}. Φ_1 = 1, Φ_2 = 2 on |S_2| = 1
/// and 0 on |S_2| = 2. With statics, g = 1_{|S_2|=1} - 1/2 trades at 0.
///
/// Expected: American price 2 without g, 3/2 with g; strong dual 2 without g,
/// 1 with g; weak dual 3/2 with g.
template <Field F>
Fixture<F> intro(bool with_static = true) {
    MarketData<F> d;
    d.name = with_static ? "intro" : "intro-no-static";
    d.horizon = 2;
    d.nodes = {{0, 0, std::nullopt, {F(0)}}, {1, 1, 0, {F(0)}},     {2, 2, 1, {F(-2)}},
               {3, 2, 1, {F(-1)}},         {4, 2, 1, {F(1)}},      {5, 2, 1, {F(2)}}};
    if (with_static) {
        StaticOption<F> g;
        g.payoff = {{2, lit<F>(-1, 2)}, {3, lit<F>(1, 2)}, {4, lit<F>(1, 2)}, {5, lit<F>(-1, 2)}};
        g.price = F(0);
        d.statics.push_back(g);
    }
    FiniteFilteredMarket<F> m(std::move(d));
    AmericanPayoff<F> phi = AmericanPayoff<F>::constant(2, m.num_paths(), F(1));
    phi.values[1] = {F(0), F(2), F(2), F(0)};
    return {m.name(),
            "S_2 in {-2,-1,1,2}; Phi_1 = 1, Phi_2 = 2*1{|S_2|=1}; static digital on |S_2|=1",
            std::move(m), std::move(phi)};
}

/// S_0 = 2, S_1 ∈ {1,3}, and under each time-1 node S_2 ∈ {0,2,4}. Φ_1 = 1 at S_1 = 1 (0 at 3),
/// Φ_2 = 8 at S_2 = 4. Static: digital paying 1 at S_2 = 4, price 2/5.
///
/// Expected: American price with the static 18/5; strong dual on this tree
/// strictly below 18/5.
template <Field F>
Fixture<F> hobson_neuberger() {
    MarketData<F> d;
    d.name = "hobson-neuberger";
    d.horizon = 2;
    d.nodes = {{0, 0, std::nullopt, {F(2)}}, {1, 1, 0, {F(1)}}, {2, 1, 0, {F(3)}},
               {3, 2, 1, {F(0)}},           {4, 2, 1, {F(2)}}, {5, 2, 1, {F(4)}},
               {6, 2, 2, {F(0)}},           {7, 2, 2, {F(2)}}, {8, 2, 2, {F(4)}}};
    StaticOption<F> g;
    g.payoff = {{5, F(1)}, {8, F(1)}};
    g.price = lit<F>(2, 5);
    d.statics.push_back(g);
    FiniteFilteredMarket<F> m(std::move(d));
    AmericanPayoff<F> phi = AmericanPayoff<F>::constant(2, m.num_paths(), F(0));
    phi.values[0] = {F(1), F(1), F(1), F(0), F(0), F(0)};
    phi.values[1] = {F(0), F(0), F(8), F(0), F(0), F(8)};
    return {m.name(),
            "S_1 in {1,3}, S_2 in {0,2,4}; Phi_1 = 1{S_1=1}, Phi_2 = 8*1{S_2=4}; digital on S_2=4 priced 2/5",
            std::move(m), std::move(phi)};
}

}  // namespace amerdual::fixtures
