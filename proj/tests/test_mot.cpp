#include "amerdual/dpp.hpp"
#include "amerdual/fixtures_mot.hpp"
#include "support/random_peacock.hpp"

#include <gtest/gtest.h>

namespace {

using namespace amerdual;
using R = Rational;

MarginalSpec<R> two_marginals(std::vector<WeightedPoint<R>> a, std::vector<WeightedPoint<R>> b, R s0) {
    return {{1, 2}, {std::move(a), std::move(b)}, {s0}};
}

TEST(Peacock, Examples) {
    auto fx = fixtures::mot_example<R>();
    EXPECT_TRUE(check_peacock(fx.mot.spec).ok);
    auto rev = two_marginals({{{R(-1)}, R(1, 2)}, {{R(1)}, R(1, 2)}}, {{{R(0)}, R(1)}}, R(0));
    auto c = check_peacock(rev);
    EXPECT_FALSE(c.ok);
    ASSERT_TRUE(c.violating_strike);
    EXPECT_EQ(*c.violating_strike, R(0));
    auto same = two_marginals(fx.mot.spec.marginals[1], fx.mot.spec.marginals[1], R(0));
    EXPECT_TRUE(check_peacock(same).ok);
    auto off_mean = two_marginals({{{R(1)}, R(1)}}, {{{R(1)}, R(1)}}, R(0));
    EXPECT_FALSE(check_peacock(off_mean).ok);
    MarginalSpec<R> two_d{{1}, {{{{R(0), R(0)}, R(1)}}}, {R(0), R(0)}};
    EXPECT_THROW(check_peacock(two_d), DimensionUnsupported);
    MarginalSpec<R> bad_weights{{1}, {{{{R(0)}, R(1, 2)}}}, {R(0)}};
    EXPECT_THROW(check_peacock(bad_weights), MalformedInput);
}

TEST(MotMarket, ExampleShapeAndGrids) {
    auto fx = fixtures::mot_example<R>();
    const auto& m = fx.mot.market;
    EXPECT_EQ(m.num_paths(), 4u);
    EXPECT_EQ(m.num_statics(), 5u);

    // Extra grid point at time 2 carries an indicator priced 0.
    PathGrid<R> grid{{{R(0)}}, {{R(-2)}, {R(-1)}, {R(0)}, {R(1)}, {R(2)}}};
    auto wide = build_mot_market(fx.mot.spec, grid);
    EXPECT_EQ(wide.market.num_statics(), 6u);
    std::vector<ExtReal<R>> at_zero;
    for (std::size_t p = 0; p < wide.market.num_paths(); ++p) at_zero.push_back(wide.market.asset(p, 2, 0) == R(0) ? R(1) : R(0));
    EXPECT_EQ(*sup_calibrated(wide.market, at_zero).value, R(0));

    PathGrid<R> missing{{{R(0)}}, {{R(-2)}, {R(-1)}, {R(1)}}};
    EXPECT_THROW(build_mot_market(fx.mot.spec, missing), SupportMismatch);

    // Dirac marginals with a wider grid: only the constant path survives.
    MarginalSpec<R> dirac{{1, 2}, {{{{R(1)}, R(1)}}, {{{R(1)}, R(1)}}}, {R(1)}};
    PathGrid<R> g2{{{R(0)}, {R(1)}, {R(2)}}, {{R(0)}, {R(1)}, {R(2)}}};
    auto dm = build_mot_market(dirac, g2);
    std::vector<ExtReal<R>> moved;
    for (std::size_t p = 0; p < dm.market.num_paths(); ++p) {
        const bool flat = dm.market.asset(p, 1, 0) == R(1) && dm.market.asset(p, 2, 0) == R(1);
        moved.push_back(flat ? R(0) : R(1));
    }
    EXPECT_EQ(*sup_calibrated(dm.market, moved).value, R(0));
}

TEST(MotValues, ExampleAndQ0) {
    auto fx = fixtures::mot_example<R>();
    auto r = mot_values(fx.mot, fx.payoff);
    EXPECT_EQ(r.primal, R(3, 2));
    EXPECT_EQ(r.weak_dual, R(3, 2));
    EXPECT_EQ(*r.strong_dual, R(1));

    auto mb = enlarge(fx.mot.market);
    auto values = payoff_on_points(mb, fx.payoff);
    EXPECT_FALSE(detail::enlarged_membership(mb, fx.q0).has_value());
    EXPECT_EQ(*expectation(fx.q0, values), R(3, 2));
    EXPECT_FALSE(is_pseudo_stopping(mb, fx.q0).member);
    EXPECT_FALSE(detail::enlarged_membership(mb, fx.q0_literal).has_value());
    EXPECT_EQ(*expectation(fx.q0_literal, values), R(1, 2));
}

TEST(MotValues, TrivialPayoffs) {
    auto fx = fixtures::mot_example<R>();
    const std::size_t n = fx.mot.market.num_paths();
    auto c = mot_values(fx.mot, AmericanPayoff<R>::constant(2, n, R(-3, 4)));
    EXPECT_EQ(c.primal, R(-3, 4));
    EXPECT_EQ(*c.strong_dual, R(-3, 4));
    auto eu = AmericanPayoff<R>::european(2, fx.payoff.values[1]);
    auto e = mot_values(fx.mot, eu);
    EXPECT_EQ(e.primal, R(1));
    EXPECT_EQ(*e.strong_dual, R(1));
    EXPECT_THROW(mot_values(fx.mot, fx.payoff, 1), EnumerationCapExceeded);
    EXPECT_FALSE(mot_values(fx.mot, fx.payoff, 1, false).strong_dual.has_value());
}

TEST(MotApprox, ExampleLadder) {
    auto fx = fixtures::mot_example<R>();
    auto ladder = default_ladder(fx.mot);
    EXPECT_EQ(ladder.size(), 1u + 2u + 1u + 4u);
    auto seq = mot_approx_sequence(fx.mot, fx.payoff, ladder);
    ASSERT_EQ(seq.size(), ladder.size() + 1);
    EXPECT_EQ(*seq.front(), R(2));
    for (std::size_t j = 1; j < seq.size(); ++j) EXPECT_FALSE(ext_less<R>(seq[j - 1], seq[j]));
    EXPECT_EQ(*seq.back(), R(3, 2));
}

TEST(Mvm, ExampleUniqueMeasure) {
    auto fx = fixtures::mot_example<R>();
    const auto& m = fx.mot.market;
    PathMeasure<R> q{std::vector<R>(m.num_paths(), R(1, 4))};
    auto eta = mvm_from_measure(fx.mot, q);
    EXPECT_EQ(eta.eta[1][1][0], std::vector<R>(4, R(1, 4)));
    for (std::size_t a = 0; a < 4; ++a) {
        std::vector<R> dirac(4, R(0));
        dirac[a] = R(1);
        EXPECT_EQ(eta.eta[1][2][a], dirac);
    }
    auto c = check_mvm(fx.mot, eta, q);
    EXPECT_TRUE(c.is_mvm && c.terminating && c.consistent);
    auto lo = check_conditional_law_and_order(fx.mot, eta, q);
    EXPECT_TRUE(lo.law_ok && lo.order_ok);

    // Frozen at the marginal: a martingale, but not terminating.
    auto frozen = eta;
    for (std::size_t i = 0; i < 2; ++i)
        for (auto& level : frozen.eta[i])
            for (auto& w : level) {
                w.clear();
                for (const auto& wp : fx.mot.spec.marginals[i]) w.push_back(wp.p);
            }
    auto fc = check_mvm(fx.mot, frozen, q);
    EXPECT_TRUE(fc.is_mvm);
    EXPECT_FALSE(fc.terminating);

    auto skew = eta;
    skew.eta[1][1][0] = {R(1, 2), R(0), R(0), R(1, 2)};
    std::swap(skew.eta[1][1][0][0], skew.eta[1][1][0][1]);
    EXPECT_FALSE(check_mvm(fx.mot, skew, q).consistent);
    EXPECT_FALSE(check_conditional_law_and_order(fx.mot, skew, q).law_ok);

    PathMeasure<R> drift{{R(0), R(0), R(1, 2), R(1, 2)}};
    EXPECT_THROW(mvm_from_measure(fx.mot, drift), NotCalibrated);
}

TEST(Mvm, RandomPeacocksRoundTrip) {
    std::mt19937 rng(77);
    for (int t = 0; t < 15; ++t) {
        auto spec = testsupport::random_peacock(rng, 5, 30);
        ASSERT_TRUE(check_peacock(spec).ok);
        auto mm = build_mot_market(spec);
        const auto& m = mm.market;
        for (int s = 0; s < 3; ++s) {
            std::vector<ExtReal<R>> xi;
            for (std::size_t p = 0; p < m.num_paths(); ++p) xi.push_back(R(std::uniform_int_distribution<int>(-4, 4)(rng)));
            auto q = *sup_calibrated(m, xi).measure;
            auto eta = mvm_from_measure(mm, q);
            auto c = check_mvm(mm, eta, q);
            EXPECT_TRUE(c.is_mvm && c.terminating && c.consistent) << t;
            auto lo = check_conditional_law_and_order(mm, eta, q);
            EXPECT_TRUE(lo.law_ok && lo.order_ok) << t;
            // η at time 0 reproduces the marginals.
            for (std::size_t i = 0; i < spec.times.size(); ++i)
                for (std::size_t j = 0; j < spec.marginals[i].size(); ++j) EXPECT_EQ(eta.eta[i][0][0][j], spec.marginals[i][j].p);
        }
        if (spec.times.size() == 1) {
            PathMeasure<R> q = *sup_calibrated(m, std::vector<ExtReal<R>>(m.num_paths(), R(0))).measure;
            EXPECT_TRUE(check_conditional_law_and_order(mm, mvm_from_measure(mm, q), q).order_ok);
        }
    }
}

TEST(MotValues, RandomPeacocksPrimalEqualsWeak) {
    std::mt19937 rng(5150);
    for (int t = 0; t < 10; ++t) {
        auto spec = testsupport::random_peacock(rng, 5, 30);
        auto mm = build_mot_market(spec);
        std::mt19937 prng(static_cast<unsigned>(t));
        AmericanPayoff<R> phi = AmericanPayoff<R>::constant(spec.horizon(), mm.market.num_paths(), R(0));
        for (auto& row : phi.values)
            for (auto& v : row) v = R(std::uniform_int_distribution<int>(-2, 4)(prng));
        auto r = mot_values(mm, phi, 20000, false);
        EXPECT_EQ(r.primal, r.weak_dual);
        if (r.strong_dual) EXPECT_LE(*r.strong_dual, r.weak_dual);
        auto seq = mot_approx_sequence(mm, phi, default_ladder(mm));
        for (std::size_t j = 1; j < seq.size(); ++j) EXPECT_FALSE(ext_less<R>(seq[j - 1], seq[j]));
        EXPECT_EQ(seq.back(), ExtReal<R>(r.weak_dual));
    }
}

}  // namespace
