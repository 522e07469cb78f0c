#include "amerdual/dpp.hpp"
#include "amerdual/fixtures_basic.hpp"
#include "support/measure_oracle.hpp"
#include "support/random_market.hpp"

#include <gtest/gtest.h>

#include <set>

namespace {

using namespace amerdual;
using R = Rational;

std::vector<ExtReal<R>> row(const AmericanPayoff<R>& phi, int k) { return phi.values[static_cast<std::size_t>(k - 1)]; }

TEST(OperatorEk, IntroAndTrivialClaims) {
    auto fx = fixtures::intro<R>(false);
    const auto& m = fx.market;
    auto v = operator_E_k(m, 1, row(fx.payoff, 2));
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(*v[0], R(2));
    std::vector<ExtReal<R>> c(m.num_paths(), R(3, 7));
    for (int k = 0; k <= 2; ++k)
        for (const auto& x : operator_E_k(m, k, c)) EXPECT_EQ(*x, R(3, 7));
    auto hn = fixtures::hobson_neuberger<R>().market;
    std::vector<ExtReal<R>> sN;
    for (std::size_t p = 0; p < hn.num_paths(); ++p) sN.push_back(hn.asset(p, 2, 0));
    auto e1 = operator_E_k(hn, 1, sN);
    for (std::size_t a = 0; a < e1.size(); ++a) EXPECT_EQ(*e1[a], hn.assets(hn.atoms(1)[a])[0]);
    EXPECT_THROW(operator_E_k(m, 3, c), MalformedInput);
}

TEST(OperatorEk, MatchesVertexEnumerationAndIsMonotone) {
    std::mt19937 rng(3);
    for (int t = 0; t < 25; ++t) {
        auto m = testsupport::random_market(rng, {3, 3, 2, 0, 1, 9});
        auto xi = testsupport::random_payoff(rng, m, 0.25).values.back();
        for (std::size_t p = 0; p < xi.size(); ++p)
            if (std::bernoulli_distribution(0.2)(rng)) xi[p] = std::nullopt;
        for (int k = 0; k < m.horizon(); ++k) {
            auto got = operator_E_k(m, k, xi);
            for (std::size_t a = 0; a < got.size(); ++a) {
                auto want = testsupport::brute_conditional_sup(m, m.atoms(k)[a], xi);
                ASSERT_EQ(got[a].has_value(), want.has_value()) << t << " k=" << k;
                if (want) EXPECT_EQ(*got[a], *want);
            }
            auto bigger = xi;
            for (auto& x : bigger) x = x ? ExtReal<R>(*x + R(1, 3)) : ExtReal<R>(R(-9));
            auto up = operator_E_k(m, k, bigger);
            auto shifted = xi;
            for (auto& x : shifted) if (x) *x += R(5, 2);
            auto sh = operator_E_k(m, k, shifted);
            for (std::size_t a = 0; a < got.size(); ++a) {
                EXPECT_FALSE(ext_less<R>(up[a], got[a]));
                if (got[a]) EXPECT_EQ(*sh[a], *got[a] + R(5, 2));
                else EXPECT_FALSE(sh[a].has_value());
            }
        }
    }
}

TEST(Snell, IntroWithoutStatics) {
    auto fx = fixtures::intro<R>(false);
    auto mb = enlarge(fx.market);
    auto env = snell_enlarged(mb, fx.payoff);
    ASSERT_EQ(env.levels.size(), 2u);
    for (const auto& v : env.levels[1]) EXPECT_EQ(*v, R(2));
    EXPECT_EQ(*env.value(), R(2));
    auto tau = optimal_tau_star(mb, fx.payoff, env);
    EXPECT_EQ(tau.tau, (std::vector<int>{2, 2, 2, 2}));
    EXPECT_EQ(*sup_calibrated(fx.market, stopped_payoff(fx.payoff, tau)).value, R(2));
}

TEST(Snell, ConstantsDominanceAndOneStep) {
    auto fx = fixtures::hobson_neuberger<R>();
    auto mb = enlarge(fx.market);
    auto c = AmericanPayoff<R>::constant(2, fx.market.num_paths(), R(4, 3));
    auto env = snell_enlarged(mb, c);
    for (const auto& level : env.levels)
        for (const auto& v : level) EXPECT_EQ(*v, R(4, 3));

    auto dom = AmericanPayoff<R>::constant(2, fx.market.num_paths(), R(0));
    for (auto& v : dom.values[0]) v = R(100);
    auto tau = optimal_tau_star(mb, dom, snell_enlarged(mb, dom));
    EXPECT_EQ(tau.tau, std::vector<int>(fx.market.num_paths(), 1));

    MarketData<R> d;
    d.horizon = 1;
    d.nodes = {{0, 0, std::nullopt, {R(0)}}, {1, 1, 0, {R(-1)}}, {2, 1, 0, {R(1)}}};
    FiniteFilteredMarket<R> one(d);
    AmericanPayoff<R> phi{{{R(3), R(1)}}};
    auto mb1 = enlarge(one);
    auto env1 = snell_enlarged(mb1, phi);
    EXPECT_EQ(*env1.value(), R(2));
    EXPECT_EQ(optimal_tau_star(mb1, phi, env1).tau, (std::vector<int>{1, 1}));
}

TEST(Snell, EuropeanEmbeddingComposesOperators) {
    std::mt19937 rng(17);
    for (int t = 0; t < 15; ++t) {
        auto m = testsupport::random_market(rng, {3, 3, 2, 0, 2, 12});
        auto xi = testsupport::random_payoff(rng, m, 0.0).values.back();
        auto env = snell_enlarged(enlarge(m), AmericanPayoff<R>::european(m.horizon(), xi));
        auto v = xi;
        for (int k = m.horizon() - 1; k >= 0; --k) {
            auto per_atom = operator_E_k(m, k, v);
            std::vector<ExtReal<R>> spread(m.num_paths());
            for (std::size_t a = 0; a < per_atom.size(); ++a) {
                auto [b, e] = m.path_range(m.atoms(k)[a]);
                for (std::size_t p = b; p < e; ++p) spread[p] = per_atom[a];
            }
            v = spread;
        }
        EXPECT_EQ(env.value(), v[0]);
    }
}

TEST(Snell, LevelsDominateImmediateExercise) {
    std::mt19937 rng(23);
    for (int t = 0; t < 15; ++t) {
        auto m = testsupport::random_market(rng, {3, 3, 2, 0, 2, 12});
        auto phi = testsupport::random_payoff(rng, m);
        auto mb = enlarge(m);
        auto env = snell_enlarged(mb, phi);
        for (int k = 1; k < m.horizon(); ++k) {
            auto ex = operator_E_k(m, k, phi.values[static_cast<std::size_t>(k - 1)]);
            for (std::size_t p = 0; p < m.num_paths(); ++p) {
                const std::size_t pos = m.atom_position(m.ancestor(p, k));
                for (int th = k; th <= m.horizon(); ++th) {
                    const auto& lv = env.levels[static_cast<std::size_t>(k)][mb.atom_of(mb.point_index(p, th), k)];
                    EXPECT_FALSE(ext_less<R>(lv, ex[pos]));
                }
            }
        }
    }
}

TEST(Dpp, StaticsFreeValuesCoincide) {
    std::mt19937 rng(41);
    for (int t = 0; t < 40; ++t) {
        auto m = testsupport::random_market(rng, {3, 3, 2, 0, 1, 16});
        auto phi = testsupport::random_payoff(rng, m);
        auto mb = enlarge(m);
        auto env = snell_enlarged(mb, phi);
        auto weak = weak_value(mb, phi);
        auto strong = strong_value(m, phi);
        auto tau = optimal_tau_star(mb, phi, env);
        EXPECT_TRUE(is_adapted(m, tau));
        auto at_tau = sup_calibrated(m, stopped_payoff(phi, tau));
        EXPECT_EQ(env.value(), weak.value) << t;
        EXPECT_EQ(weak.value, strong.value) << t;
        EXPECT_EQ(strong.value, at_tau.value) << t;
    }
}

TEST(Extension, IntroMatchesFigure) {
    auto fx = fixtures::intro<R>();
    auto out = extend_and_verify(fx.market, fx.payoff);
    const auto& x = out.extension.market;
    EXPECT_EQ(x.dim(), 2u);
    EXPECT_EQ(x.num_statics(), 0u);
    std::set<R> y1;
    for (std::size_t node : x.atoms(1)) y1.insert(x.assets(node)[1]);
    EXPECT_EQ(y1, (std::set<R>{R(-1, 2), R(1, 2)}));
    EXPECT_EQ(*out.check.strong_value_hat, R(3, 2));
    EXPECT_TRUE(out.check.realizes);
    EXPECT_EQ(out.attempts, 1);
    ASSERT_TRUE(out.check.tau_hat);
    for (std::size_t p = 0; p < x.num_paths(); ++p) {
        const R y = x.asset(p, 1, 1);
        EXPECT_EQ(out.check.tau_hat->tau[p], y == R(-1, 2) ? 1 : 2);
    }
}

TEST(Extension, HobsonNeubergerMatchesFigure) {
    auto fx = fixtures::hobson_neuberger<R>();
    auto out = extend_and_verify(fx.market, fx.payoff);
    const auto& ext = out.extension;
    std::set<R> quoted;
    for (std::size_t node : ext.market.atoms(1)) quoted.insert(ext.market.assets(node)[1] + ext.y_offsets[0]);
    EXPECT_EQ(quoted, (std::set<R>{R(0), R(1, 4), R(3, 4)}));
    EXPECT_EQ(*out.check.strong_value_hat, R(18, 5));
    EXPECT_TRUE(out.check.realizes);
    EXPECT_LT(*strong_value(fx.market, fx.payoff).value, R(18, 5));
}

TEST(Extension, WithoutStaticsKeepsStrongValue) {
    std::mt19937 rng(8);
    for (int t = 0; t < 10; ++t) {
        auto m = testsupport::random_market(rng, {3, 3, 1, 0, 1, 10});
        auto phi = testsupport::random_payoff(rng, m);
        auto out = extend_and_verify(m, phi);
        EXPECT_EQ(out.extension.market.dim(), m.dim());
        EXPECT_EQ(out.check.strong_value_hat, strong_value(m, phi).value);
        EXPECT_TRUE(out.check.realizes);
    }
}

TEST(Extension, InvariantsOnRandomMarkets) {
    std::mt19937 rng(1234);
    int realized = 0, total = 0;
    for (int t = 0; t < 20; ++t) {
        auto m = testsupport::random_market(rng, {2, 3, 1, 2, 1, 9});
        auto phi = testsupport::random_payoff(rng, m);
        auto out = extend_and_verify(m, phi);
        const auto& ext = out.extension;
        const auto& x = ext.market;
        const std::size_t d = m.dim();
        for (std::size_t s = 0; s < m.num_statics(); ++s) {
            EXPECT_EQ(x.assets(x.root())[d + s], R(0));
            for (std::size_t p = 0; p < x.num_paths(); ++p)
                EXPECT_EQ(x.asset(p, x.horizon(), d + s), m.static_net(s, ext.projection[p]));
        }
        auto q = ext.pushforward();
        for (int k = 1; k <= x.horizon(); ++k) {
            for (std::size_t node : x.atoms(k - 1)) {
                auto [b, e] = x.path_range(node);
                for (std::size_t a = 0; a < x.dim(); ++a) {
                    R drift(0);
                    for (std::size_t p = b; p < e; ++p) drift += q.weights[p] * x.increment(p, k, a);
                    EXPECT_EQ(drift, R(0));
                }
            }
        }
        auto hat = pull_back(ext, phi);
        EXPECT_EQ(weak_value(enlarge(x), hat).value, weak_value(enlarge(m), phi).value);
        ++total;
        realized += out.check.realizes ? 1 : 0;
    }
    EXPECT_EQ(realized, total);
}

TEST(Extension, RejectsUncalibratedSource) {
    auto fx = fixtures::intro<R>();
    auto mb = enlarge(fx.market);
    EnlargedMeasure<R> qb{std::vector<R>(mb.num_points(), R(0))};
    qb.weights[mb.point_index(1, 2)] = R(1, 2);
    qb.weights[mb.point_index(2, 2)] = R(1, 2);
    EXPECT_THROW(build_dynamic_extension(fx.market, qb), NotCalibrated);
}

}  // namespace
