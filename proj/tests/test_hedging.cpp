#include "amerdual/arbitrage.hpp"
#include "amerdual/fixtures_basic.hpp"
#include "amerdual/hedging.hpp"
#include "support/random_market.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace {

using namespace amerdual;
using R = Rational;

std::vector<ExtReal<R>> claim(std::initializer_list<R> v) { return {v.begin(), v.end()}; }

TEST(PriceEuropean, IntroDigitalWithoutStatics) {
    auto fx = fixtures::intro<R>(false);
    auto xi = claim({R(-1, 2), R(1, 2), R(1, 2), R(-1, 2)});
    auto res = price_european(fx.market, xi, false);

    // Oracle: the only risky position is H over (1,2]; minimal capital for a
    // given H is max over paths of ξ - H·ΔS. Scan H on a grid.
    R best(1000);
    const std::vector<R> moves{R(-2), R(-1), R(1), R(2)};
    for (int i = -32; i <= 32; ++i) {
        R h(i, 8), need(-1000);
        for (std::size_t p = 0; p < 4; ++p) need = std::max(need, *xi[p] - h * moves[p]);
        best = std::min(best, need);
    }
    EXPECT_EQ(best, R(1, 2));
    EXPECT_EQ(res.value, best);
    for (std::size_t p = 0; p < 4; ++p) EXPECT_GE(res.value + stochastic_integral(fx.market, res.strategy, p), *xi[p]);
}

TEST(PriceEuropean, ReplicationAndConstants) {
    std::mt19937 rng(1);
    for (int t = 0; t < 20; ++t) {
        auto m = testsupport::random_market(rng, {3, 3, 2, 0, 1, 20});
        if (check_na(m)) continue;
        std::vector<ExtReal<R>> sN, c;
        for (std::size_t p = 0; p < m.num_paths(); ++p) {
            sN.push_back(m.asset(p, m.horizon(), 0));
            c.push_back(R(7, 3));
        }
        EXPECT_EQ(price_european(m, sN, false).value, m.assets(m.root())[0]);
        auto rc = price_european(m, c, true);
        EXPECT_EQ(rc.value, R(7, 3));
    }
}

TEST(PriceAmerican, IntroValues) {
    auto plain = fixtures::intro<R>(false);
    EXPECT_EQ(price_american(plain.market, plain.payoff, false).value, R(2));
    auto fx = fixtures::intro<R>();
    auto res = price_american(fx.market, fx.payoff, true);
    EXPECT_EQ(res.value, R(3, 2));
    // The returned strategy superhedges every exercise date and is consistent.
    for (int j = 1; j <= 2; ++j) {
        for (std::size_t p = 0; p < fx.market.num_paths(); ++p) {
            R lhs = res.value + stochastic_integral(fx.market, res.strategy.branches[static_cast<std::size_t>(j - 1)], p) +
                    static_gain(fx.market, res.strategy.h, p);
            EXPECT_GE(lhs, *fx.payoff.at(j, p));
        }
    }
    EXPECT_EQ(res.strategy.branches[0].H[0], res.strategy.branches[1].H[0]);
}

TEST(PriceAmerican, ConstantPayoff) {
    auto fx = fixtures::hobson_neuberger<R>();
    auto c = AmericanPayoff<R>::constant(2, fx.market.num_paths(), R(-5, 7));
    EXPECT_EQ(price_american(fx.market, c, true).value, R(-5, 7));
    EXPECT_EQ(price_american(fx.market, c, false).value, R(-5, 7));
}

TEST(PriceEnlarged, MatchesAmericanOnFixtures) {
    auto fx = fixtures::intro<R>();
    EXPECT_EQ(price_european_enlarged(enlarge(fx.market), fx.payoff, true).value, R(3, 2));
    auto hn = fixtures::hobson_neuberger<R>();
    EXPECT_EQ(price_american(hn.market, hn.payoff, true).value, R(18, 5));
    EXPECT_EQ(price_european_enlarged(enlarge(hn.market), hn.payoff, true).value, R(18, 5));
}

TEST(PriceEnlarged, EuropeanEmbedding) {
    auto fx = fixtures::intro<R>();
    std::vector<ExtReal<R>> xi = fx.payoff.values[1];
    auto emb = AmericanPayoff<R>::european(2, xi);
    for (bool statics : {false, true}) {
        EXPECT_EQ(price_european_enlarged(enlarge(fx.market), emb, statics).value,
                  price_european(fx.market, xi, statics).value);
    }
}

TEST(PriceEnlarged, ArbitrageIsUnboundedBelow) {
    MarketData<R> d;
    d.horizon = 1;
    d.nodes = {{0, 0, std::nullopt, {R(0)}}, {1, 1, 0, {R(1)}}, {2, 1, 0, {R(2)}}};
    FiniteFilteredMarket<R> m(d);
    auto phi = AmericanPayoff<R>::constant(1, 2, R(0));
    EXPECT_THROW(price_american(m, phi, false), UnboundedBelow);
    EXPECT_THROW(price_european_enlarged(enlarge(m), phi, false), UnboundedBelow);
}

TEST(HedgingProperties, EnlargementMonotonicityTranslation) {
    std::mt19937 rng(2024);
    int checked = 0;
    for (int t = 0; t < 40; ++t) {
        auto m = testsupport::random_market(rng, {3, 3, 2, 2, 1, 20});
        if (check_na(m)) continue;
        auto phi = testsupport::random_payoff(rng, m);
        auto mb = enlarge(m);
        for (bool statics : {false, true}) {
            R a = price_american(m, phi, statics).value;
            EXPECT_EQ(a, price_european_enlarged(mb, phi, statics).value) << t;
            auto shifted = phi;
            for (auto& row : shifted.values) for (auto& v : row) if (v) *v += R(3, 2);
            EXPECT_EQ(price_american(m, shifted, statics).value, a + R(3, 2));
            auto bigger = phi;
            bigger.values[0][0] = bigger.values[0][0] ? *bigger.values[0][0] + R(1) : R(0);
            EXPECT_GE(price_american(m, bigger, statics).value, a);
        }
        EXPECT_LE(price_american(m, phi, true).value, price_american(m, phi, false).value);
        ++checked;
    }
    EXPECT_GT(checked, 10);
}

}  // namespace
