#pragma once

// Seeded random generators for event-tree markets and American payoffs.

#include "amerdual/market.hpp"

#include <algorithm>
#include <random>

namespace testsupport {

using amerdual::AmericanPayoff;
using amerdual::FiniteFilteredMarket;
using amerdual::MarketData;
using amerdual::NodeSpec;
using amerdual::Rational;
using amerdual::StaticOption;

struct MarketShape {
    int max_horizon = 4;
    int max_branching = 3;
    int max_dim = 2;
    int max_statics = 2;
    int min_horizon = 1;
    // Upper bound on terminal paths; deeper trees are thinned to stay below it.
    std::size_t max_paths = 40;
    // Probability of planting an arbitrage; otherwise S is a martingale under a
    // full-support measure that also prices the statics.
    double arbitrage_rate = 0.0;
};

inline Rational small_rational(std::mt19937& rng, int lo, int hi, int max_den = 2) {
    std::uniform_int_distribution<int> num(lo * max_den, hi * max_den), den(1, max_den);
    return Rational(num(rng), den(rng));
}

inline MarketData<Rational> random_market_data(std::mt19937& rng, const MarketShape& shape) {
    std::uniform_int_distribution<int> hz(shape.min_horizon, shape.max_horizon), br(1, shape.max_branching),
        dm(1, shape.max_dim), ns(0, shape.max_statics), step(-3, 3);
    MarketData<Rational> d;
    d.name = "random";
    d.horizon = hz(rng);
    const int dim = dm(rng);
    std::vector<Rational> s0;
    for (int a = 0; a < dim; ++a) s0.push_back(Rational(std::uniform_int_distribution<int>(0, 6)(rng)));
    d.nodes.push_back({0, 0, std::nullopt, s0});
    std::vector<std::size_t> frontier{0};
    std::vector<Rational> prob{Rational(1)};  // reference measure, indexed like d.nodes
    std::uniform_int_distribution<int> weight(1, 4);
    int next_id = 1;
    for (int k = 1; k <= d.horizon; ++k) {
        std::vector<std::size_t> next;
        const std::size_t remaining_levels = static_cast<std::size_t>(d.horizon - k);
        for (std::size_t parent : frontier) {
            int b = br(rng);
            // Keep the path count bounded: cap branching when the tree is already wide.
            std::size_t projected = (next.size() + static_cast<std::size_t>(b)) << remaining_levels;
            while (b > 1 && projected > shape.max_paths) {
                --b;
                projected = (next.size() + static_cast<std::size_t>(b)) << remaining_levels;
            }
            std::vector<int> w;
            std::vector<std::vector<Rational>> offs;
            int wsum = 0;
            for (int c = 0; c < b; ++c) {
                w.push_back(weight(rng));
                wsum += w.back();
                std::vector<Rational> o;
                for (int a = 0; a < dim; ++a) o.push_back(Rational(step(rng)));
                offs.push_back(o);
            }
            for (int a = 0; a < dim; ++a) {
                Rational mean(0);
                for (int c = 0; c < b; ++c) mean += Rational(w[static_cast<std::size_t>(c)], wsum) * offs[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)];
                for (int c = 0; c < b; ++c) offs[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)] -= mean;
            }
            const Rational pp = prob[parent];
            for (int c = 0; c < b; ++c) {
                std::vector<Rational> v = d.nodes[parent].assets;
                for (int a = 0; a < dim; ++a) v[static_cast<std::size_t>(a)] += offs[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)];
                d.nodes.push_back({next_id++, k, d.nodes[parent].id, v});
                prob.push_back(pp * Rational(w[static_cast<std::size_t>(c)], wsum));
                next.push_back(d.nodes.size() - 1);
            }
        }
        frontier = std::move(next);
    }
    const int nstat = ns(rng);
    for (int s = 0; s < nstat; ++s) {
        StaticOption<Rational> g;
        Rational fair(0);
        for (std::size_t leaf : frontier) {
            Rational v = small_rational(rng, -2, 3);
            fair += prob[leaf] * v;
            if (!v.is_zero()) g.payoff[d.nodes[leaf].id] = v;
        }
        g.price = fair;
        d.statics.push_back(g);
    }
    if (std::bernoulli_distribution(shape.arbitrage_rate)(rng)) {
        if (!d.statics.empty() && std::bernoulli_distribution(0.5)(rng)) {
            // Price a static outside the range of its payoff.
            Rational hi(0);
            for (const auto& [id, v] : d.statics.front().payoff) hi = std::max(hi, v);
            d.statics.front().price = hi + Rational(1);
        } else {
            // Shift every child of one node upwards: a sure gain from buying there.
            std::vector<std::size_t> inner;
            for (std::size_t i = 0; i < d.nodes.size(); ++i)
                if (d.nodes[i].time < d.horizon) inner.push_back(i);
            const std::size_t pick = inner[std::uniform_int_distribution<std::size_t>(0, inner.size() - 1)(rng)];
            std::vector<int> subtree_ids{d.nodes[pick].id};
            for (std::size_t i = 0; i < d.nodes.size(); ++i) {
                if (d.nodes[i].parent && std::find(subtree_ids.begin(), subtree_ids.end(), *d.nodes[i].parent) != subtree_ids.end()) {
                    subtree_ids.push_back(d.nodes[i].id);
                    d.nodes[i].assets[0] += Rational(1);
                }
            }
        }
    }
    return d;
}

inline FiniteFilteredMarket<Rational> random_market(std::mt19937& rng, const MarketShape& shape) {
    return FiniteFilteredMarket<Rational>(random_market_data(rng, shape));
}

/// Random American payoff; Φ_N is finite everywhere, earlier dates are -inf
/// with probability `masked`.
inline AmericanPayoff<Rational> random_payoff(std::mt19937& rng, const FiniteFilteredMarket<Rational>& m,
                                              double masked = 0.1) {
    std::bernoulli_distribution mask(masked);
    AmericanPayoff<Rational> phi = AmericanPayoff<Rational>::constant(m.horizon(), m.num_paths(), Rational(0));
    for (int k = 1; k <= m.horizon(); ++k) {
        for (std::size_t p = 0; p < m.num_paths(); ++p) {
            if (k < m.horizon() && mask(rng)) {
                phi.values[static_cast<std::size_t>(k - 1)][p] = std::nullopt;
            } else {
                phi.values[static_cast<std::size_t>(k - 1)][p] = small_rational(rng, -2, 5);
            }
        }
    }
    return phi;
}

/// Random adapted payoff: Φ_k depends on the time-k node only.
inline AmericanPayoff<Rational> random_adapted_payoff(std::mt19937& rng, const FiniteFilteredMarket<Rational>& m) {
    AmericanPayoff<Rational> phi = AmericanPayoff<Rational>::constant(m.horizon(), m.num_paths(), Rational(0));
    for (int k = 1; k <= m.horizon(); ++k) {
        for (std::size_t node : m.atoms(k)) {
            Rational v = small_rational(rng, -2, 5);
            auto [b, e] = m.path_range(node);
            for (std::size_t p = b; p < e; ++p) phi.values[static_cast<std::size_t>(k - 1)][p] = v;
        }
    }
    return phi;
}

}  // namespace testsupport
