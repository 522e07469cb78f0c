#pragma once

#include "amerdual/dual.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

namespace amerdual {

template <Field F>
struct WeightedPoint {
    std::vector<F> x;
    F p;
};

/// Marginal constraints L(S_{t_i}) = μ_i at times t_1 < ... < t_M = N.
template <Field F>
struct MarginalSpec {
    std::vector<int> times;
    std::vector<std::vector<WeightedPoint<F>>> marginals;
    std::vector<F> s0;

    [[nodiscard]] int horizon() const { return times.empty() ? 0 : times.back(); }
    [[nodiscard]] std::size_t dim() const { return s0.size(); }
};

template <Field F>
void validate_spec(const MarginalSpec<F>& spec) {
    if (spec.times.empty() || spec.times.size() != spec.marginals.size())
        throw MalformedInput("marginal spec needs one marginal per time");
    if (spec.s0.empty()) throw MalformedInput("marginal spec has an empty s0");
    for (std::size_t i = 0; i < spec.times.size(); ++i) {
        if (spec.times[i] < 1 || (i > 0 && spec.times[i] <= spec.times[i - 1]))
            throw MalformedInput("marginal times must be increasing and start at 1 or later");
        F total(0);
        if (spec.marginals[i].empty()) throw MalformedInput("marginal " + std::to_string(i) + " is empty");
        for (const auto& wp : spec.marginals[i]) {
            if (wp.x.size() != spec.dim()) throw MalformedInput("marginal " + std::to_string(i) + " has a point of the wrong dimension");
            if (!field_traits<F>::positive(wp.p)) throw MalformedInput("marginal " + std::to_string(i) + " has a non-positive weight");
            total += wp.p;
        }
        if (!field_traits<F>::eq(total, F(1)))
            throw MalformedInput("marginal " + std::to_string(i) + " has total weight " + field_traits<F>::render(total));
    }
}

namespace detail {

template <Field F>
F call_value(const std::vector<WeightedPoint<F>>& mu, const F& strike) {
    F s(0);
    for (const auto& wp : mu)
        if (field_traits<F>::less(strike, wp.x[0])) s += wp.p * (wp.x[0] - strike);
    return s;
}

template <Field F>
F mean(const std::vector<WeightedPoint<F>>& mu, std::size_t a = 0) {
    F s(0);
    for (const auto& wp : mu) s += wp.p * wp.x[a];
    return s;
}

template <Field F>
std::vector<F> strikes(const std::vector<const std::vector<WeightedPoint<F>>*>& mus) {
    std::vector<F> ks;
    for (const auto* mu : mus)
        for (const auto& wp : *mu) ks.push_back(wp.x[0]);
    std::sort(ks.begin(), ks.end(), [](const F& a, const F& b) { return field_traits<F>::less(a, b); });
    ks.erase(std::unique(ks.begin(), ks.end(), [](const F& a, const F& b) { return field_traits<F>::eq(a, b); }), ks.end());
    return ks;
}

/// First strike where the call price of `lo` exceeds that of `hi`, if any.
template <Field F>
std::optional<F> convex_order_violation(const std::vector<WeightedPoint<F>>& lo, const std::vector<WeightedPoint<F>>& hi) {
    for (const F& k : strikes<F>({&lo, &hi}))
        if (field_traits<F>::less(call_value(hi, k), call_value(lo, k))) return k;
    return std::nullopt;
}

}  // namespace detail

template <Field F>
struct PeacockCheck {
    bool ok = false;
    std::optional<F> violating_strike;
    std::string message;
};

/// Convex order μ_1 ⪯ ... ⪯ μ_M with common mean s0, one-dimensional only.
template <Field F>
PeacockCheck<F> check_peacock(const MarginalSpec<F>& spec) {
    validate_spec(spec);
    if (spec.dim() != 1) throw DimensionUnsupported("convex order is only checked for one-dimensional marginals");
    for (std::size_t i = 0; i < spec.marginals.size(); ++i) {
        F m = detail::mean(spec.marginals[i]);
        if (!field_traits<F>::eq(m, spec.s0[0]))
            return {false, std::nullopt, "marginal " + std::to_string(i) + " has mean " + field_traits<F>::render(m) +
                                             ", expected " + field_traits<F>::render(spec.s0[0])};
    }
    for (std::size_t i = 0; i + 1 < spec.marginals.size(); ++i) {
        if (auto k = detail::convex_order_violation(spec.marginals[i], spec.marginals[i + 1]))
            return {false, k, "call at strike " + field_traits<F>::render(*k) + " is cheaper under marginal " +
                                  std::to_string(i + 1) + " than under marginal " + std::to_string(i)};
    }
    return {true, std::nullopt, ""};
}

/// Per-time grids of attainable states, times 1..N.
template <Field F>
using PathGrid = std::vector<std::vector<std::vector<F>>>;

/// Marginal supports at marginal times; other times use the next marginal's support.
template <Field F>
PathGrid<F> default_grid(const MarginalSpec<F>& spec) {
    validate_spec(spec);
    PathGrid<F> g(static_cast<std::size_t>(spec.horizon()));
    std::size_t i = 0;
    for (int k = 1; k <= spec.horizon(); ++k) {
        while (spec.times[i] < k) ++i;
        for (const auto& wp : spec.marginals[i]) g[static_cast<std::size_t>(k - 1)].push_back(wp.x);
    }
    return g;
}

template <Field F>
struct MotMarket {
    MarginalSpec<F> spec;
    PathGrid<F> grid;
    FiniteFilteredMarket<F> market;
};

/// Full path tree over the grids with one indicator static 1{S_{t_i} = x} per
/// grid point x at each marginal time, priced μ_i({x}).
template <Field F>
MotMarket<F> build_mot_market(const MarginalSpec<F>& spec, PathGrid<F> grid, std::string name = "mot") {
    validate_spec(spec);
    const int N = spec.horizon();
    if (grid.size() != static_cast<std::size_t>(N)) throw MalformedInput("path grid must list states for times 1.." + std::to_string(N));
    for (std::size_t i = 0; i < spec.times.size(); ++i) {
        const auto& g = grid[static_cast<std::size_t>(spec.times[i] - 1)];
        for (const auto& wp : spec.marginals[i]) {
            if (std::find(g.begin(), g.end(), wp.x) == g.end()) {
                std::string pt;
                for (const F& v : wp.x) pt += (pt.empty() ? "" : ",") + field_traits<F>::render(v);
                throw SupportMismatch("support point (" + pt + ") of marginal " + std::to_string(i) +
                                      " is not on the grid at time " + std::to_string(spec.times[i]));
            }
        }
    }
    for (const auto& level : grid)
        for (const auto& x : level)
            if (x.size() != spec.dim()) throw MalformedInput("grid point of the wrong dimension");
    if (spec.dim() == 1) {
        auto pc = check_peacock(spec);
        if (!pc.ok) throw NoCalibratedMeasure("marginals are not in convex order: " + pc.message);
    }

    MarketData<F> d;
    d.name = std::move(name);
    d.horizon = N;
    d.nodes.push_back({0, 0, std::nullopt, spec.s0});
    std::vector<std::vector<std::size_t>> leaf_state;  // per leaf: grid index at each time
    std::vector<std::size_t> state;
    std::function<void(int, int)> grow = [&](int parent, int k) {
        if (k > N) {
            leaf_state.push_back(state);
            return;
        }
        const auto& g = grid[static_cast<std::size_t>(k - 1)];
        for (std::size_t j = 0; j < g.size(); ++j) {
            const int id = static_cast<int>(d.nodes.size());
            d.nodes.push_back({id, k, parent, g[j]});
            state.push_back(j);
            grow(id, k + 1);
            state.pop_back();
        }
    };
    grow(0, 1);
    std::vector<int> leaf_ids;
    for (const auto& n : d.nodes)
        if (n.time == N) leaf_ids.push_back(n.id);
    for (std::size_t i = 0; i < spec.times.size(); ++i) {
        const std::size_t t = static_cast<std::size_t>(spec.times[i] - 1);
        for (std::size_t j = 0; j < grid[t].size(); ++j) {
            StaticOption<F> g;
            for (std::size_t l = 0; l < leaf_ids.size(); ++l)
                if (leaf_state[l][t] == j) g.payoff[leaf_ids[l]] = F(1);
            g.price = F(0);
            for (const auto& wp : spec.marginals[i])
                if (wp.x == grid[t][j]) g.price += wp.p;
            d.statics.push_back(std::move(g));
        }
    }
    return {spec, std::move(grid), FiniteFilteredMarket<F>(std::move(d))};
}

template <Field F>
MotMarket<F> build_mot_market(const MarginalSpec<F>& spec, std::string name = "mot") {
    return build_mot_market(spec, default_grid(spec), std::move(name));
}

/// Primal and weak dual (asserted equal); the strong dual is enumerated when
/// the stopping-rule count is within `cap`, otherwise it is left out or, with
/// `require_strong`, reported as EnumerationCapExceeded.
template <Field F>
GapReport<F> mot_values(const MotMarket<F>& mm, const AmericanPayoff<F>& phi, std::uint64_t cap = 1000000,
                        bool require_strong = true) {
    const auto& m = mm.market;
    check_payoff(m, phi);
    F primal = price_american(m, phi, true).value;
    auto weak = weak_value(enlarge(m), phi);
    if (!weak.value) throw NoCalibratedMeasure("payoff is -inf under every calibrated enlarged measure");
    if (!field_traits<F>::eq(primal, *weak.value))
        throw NumericalFailure("marginal-constrained primal " + field_traits<F>::render(primal) + " differs from weak dual " +
                               field_traits<F>::render(*weak.value));
    GapReport<F> r{primal, *weak.value, std::nullopt, std::nullopt, true};
    const std::uint64_t count = count_stopping_times(m);
    if (count > cap) {
        if (require_strong) throw EnumerationCapExceeded(count, cap);
        return r;
    }
    auto strong = strong_value(m, phi, cap);
    if (strong.value) {
        r.strong_dual = *strong.value;
        r.gap_weak_strong = *weak.value - *strong.value;
    }
    return r;
}

/// Static payoff f(S_{t_i}) priced at μ_i(f).
template <Field F>
struct LadderOption {
    enum class Kind { Cash, Forward, Call };
    Kind kind = Kind::Cash;
    std::size_t marginal = 0;
    F strike = F(0);

    [[nodiscard]] F payoff(const std::vector<F>& x) const {
        switch (kind) {
            case Kind::Cash: return F(1);
            case Kind::Forward: return x[0];
            case Kind::Call: return field_traits<F>::less(strike, x[0]) ? x[0] - strike : F(0);
        }
        return F(0);
    }

    [[nodiscard]] std::string label(const MarginalSpec<F>& spec) const {
        const std::string t = std::to_string(spec.times[marginal]);
        switch (kind) {
            case Kind::Cash: return "cash";
            case Kind::Forward: return "forward@" + t;
            case Kind::Call: return "call(" + field_traits<F>::render(strike) + ")@" + t;
        }
        return "";
    }
};

/// Cash, a forward per marginal time, then calls at every grid strike per
/// marginal time in increasing order.
template <Field F>
std::vector<LadderOption<F>> default_ladder(const MotMarket<F>& mm) {
    if (mm.spec.dim() != 1) throw DimensionUnsupported("the default ladder is one-dimensional");
    using K = typename LadderOption<F>::Kind;
    std::vector<LadderOption<F>> ladder{{K::Cash, 0, F(0)}};
    for (std::size_t i = 0; i < mm.spec.times.size(); ++i) ladder.push_back({K::Forward, i, F(0)});
    for (std::size_t i = 0; i < mm.spec.times.size(); ++i) {
        std::vector<F> ks;
        for (const auto& x : mm.grid[static_cast<std::size_t>(mm.spec.times[i] - 1)]) ks.push_back(x[0]);
        std::sort(ks.begin(), ks.end(), [](const F& a, const F& b) { return field_traits<F>::less(a, b); });
        for (const F& k : ks) ladder.push_back({K::Call, i, k});
    }
    return ladder;
}

/// Weak dual with only the first m ladder options as statics, m = 0..|ladder|.
template <Field F>
std::vector<ExtReal<F>> mot_approx_sequence(const MotMarket<F>& mm, const AmericanPayoff<F>& phi,
                                            const std::vector<LadderOption<F>>& ladder) {
    const auto& m = mm.market;
    check_payoff(m, phi);
    std::vector<StaticOption<F>> opts;
    for (const auto& o : ladder) {
        if (o.marginal >= mm.spec.times.size()) throw MalformedInput("ladder option refers to a missing marginal");
        if (o.kind != LadderOption<F>::Kind::Cash && mm.spec.dim() != 1)
            throw DimensionUnsupported("ladder options other than cash are one-dimensional");
        StaticOption<F> g;
        const int t = mm.spec.times[o.marginal];
        for (std::size_t p = 0; p < m.num_paths(); ++p) {
            F v = o.payoff(m.assets(m.ancestor(p, t)));
            if (!field_traits<F>::is_zero(v)) g.payoff[m.node_id(m.leaf(p))] = v;
        }
        for (const auto& wp : mm.spec.marginals[o.marginal]) g.price += wp.p * o.payoff(wp.x);
        opts.push_back(std::move(g));
    }
    std::vector<ExtReal<F>> out(ladder.size() + 1);
    parallel_for(out.size(), [&](std::size_t j) {
        MarketData<F> d = m.data();
        d.statics.assign(opts.begin(), opts.begin() + static_cast<std::ptrdiff_t>(j));
        out[j] = weak_value(enlarge(FiniteFilteredMarket<F>(std::move(d))), phi).value;
    });
    return out;
}

/// eta[i][k][atom position at time k]: weights on the support of μ_i.
template <Field F>
struct MVMProcess {
    std::vector<std::vector<std::vector<std::vector<F>>>> eta;
};

namespace detail {

template <Field F>
std::optional<std::size_t> support_index(const std::vector<WeightedPoint<F>>& mu, const std::vector<F>& x) {
    for (std::size_t j = 0; j < mu.size(); ++j)
        if (mu[j].x == x) return j;
    return std::nullopt;
}

/// Law of S_{t_i} on `node` under q, unnormalized; nullopt if a charged path
/// lands off the support.
template <Field F>
std::optional<std::vector<F>> joint_law(const MotMarket<F>& mm, const PathMeasure<F>& q, std::size_t i, std::size_t node) {
    const auto& m = mm.market;
    const auto& mu = mm.spec.marginals[i];
    std::vector<F> w(mu.size(), F(0));
    auto [b, e] = m.path_range(node);
    for (std::size_t p = b; p < e; ++p) {
        if (field_traits<F>::is_zero(q.weights[p])) continue;
        auto j = support_index(mu, m.assets(m.ancestor(p, mm.spec.times[i])));
        if (!j) return std::nullopt;
        w[*j] += q.weights[p];
    }
    return w;
}

}  // namespace detail

/// η^i_k = law of S_{t_i} given the time-k atom under Q; zero-mass atoms copy their parent.
template <Field F>
MVMProcess<F> mvm_from_measure(const MotMarket<F>& mm, const PathMeasure<F>& q) {
    const auto& m = mm.market;
    if (q.weights.size() != m.num_paths()) throw MalformedInput("measure does not cover every path");
    if (auto c = detail::check_calibrated_martingale(m, q)) throw NotCalibrated("measure is not in the marginal-constrained set: " + c->detail);
    MVMProcess<F> out;
    for (std::size_t i = 0; i < mm.spec.times.size(); ++i) {
        auto& per_i = out.eta.emplace_back(static_cast<std::size_t>(m.horizon()) + 1);
        for (int k = 0; k <= m.horizon(); ++k) {
            auto& level = per_i[static_cast<std::size_t>(k)];
            for (std::size_t node : m.atoms(k)) {
                F mass = detail::atom_mass(m, q, node);
                if (field_traits<F>::is_zero(mass)) {
                    level.push_back(per_i[static_cast<std::size_t>(k - 1)][m.atom_position(*m.parent(node))]);
                    continue;
                }
                auto w = detail::joint_law(mm, q, i, node);
                if (!w) throw NotCalibrated("a charged path leaves the support of marginal " + std::to_string(i));
                for (auto& v : *w) v /= mass;
                level.push_back(std::move(*w));
            }
        }
    }
    return out;
}

struct MVMCheck {
    bool is_mvm = false;
    bool terminating = false;
    bool consistent = false;
};

/// Checks on charged atoms: η^i_k(f) is a Q-martingale for each support
/// indicator f, η^i_{t_i} is Dirac, and S_k is the mean of η^i_k for k <= t_i.
template <Field F>
MVMCheck check_mvm(const MotMarket<F>& mm, const MVMProcess<F>& eta, const PathMeasure<F>& q) {
    const auto& m = mm.market;
    const int N = m.horizon();
    MVMCheck r{true, true, true};
    if (eta.eta.size() != mm.spec.times.size()) return {false, false, false};
    for (std::size_t i = 0; i < mm.spec.times.size(); ++i) {
        const auto& mu = mm.spec.marginals[i];
        const int ti = mm.spec.times[i];
        if (eta.eta[i].size() != static_cast<std::size_t>(N) + 1) return {false, false, false};
        for (int k = 0; k <= N; ++k) {
            const auto& level = eta.eta[i][static_cast<std::size_t>(k)];
            if (level.size() != m.atoms(k).size()) return {false, false, false};
            for (std::size_t a = 0; a < level.size(); ++a) {
                const std::size_t node = m.atoms(k)[a];
                F mass = detail::atom_mass(m, q, node);
                if (field_traits<F>::is_zero(mass)) continue;
                const auto& w = level[a];
                if (w.size() != mu.size()) return {false, false, false};
                F total(0);
                std::size_t nonzero = 0;
                for (const F& v : w) {
                    if (field_traits<F>::negative(v)) r.is_mvm = false;
                    if (!field_traits<F>::is_zero(v)) ++nonzero;
                    total += v;
                }
                if (!field_traits<F>::eq(total, F(1))) r.is_mvm = false;
                if (k == ti && nonzero != 1) r.terminating = false;
                if (k <= ti) {
                    for (std::size_t c = 0; c < mm.spec.dim(); ++c) {
                        F mean(0);
                        for (std::size_t j = 0; j < mu.size(); ++j) mean += w[j] * mu[j].x[c];
                        if (!field_traits<F>::eq(mean, m.assets(node)[c])) r.consistent = false;
                    }
                }
                if (k < N) {
                    for (std::size_t j = 0; j < mu.size(); ++j) {
                        F next(0);
                        for (std::size_t ch : m.children(node))
                            next += detail::atom_mass(m, q, ch) *
                                    eta.eta[i][static_cast<std::size_t>(k) + 1][m.atom_position(ch)].at(j);
                        if (!field_traits<F>::eq(next, mass * w[j])) r.is_mvm = false;
                    }
                }
            }
        }
    }
    return r;
}

struct LawOrderCheck {
    bool law_ok = false;
    bool order_ok = false;
};

/// law_ok: η^i_k is the conditional law of S_{t_i} given F_k for k <= t_i.
/// order_ok: η^j_k ⪯ η^i_k in convex order for k <= t_j <= t_i.
template <Field F>
LawOrderCheck check_conditional_law_and_order(const MotMarket<F>& mm, const MVMProcess<F>& eta, const PathMeasure<F>& q) {
    const auto& m = mm.market;
    const auto& spec = mm.spec;
    if (eta.eta.size() != spec.times.size()) return {false, false};
    LawOrderCheck r{true, true};
    auto as_measure = [&](std::size_t i, const std::vector<F>& w) {
        std::vector<WeightedPoint<F>> out;
        for (std::size_t j = 0; j < w.size(); ++j) out.push_back({spec.marginals[i][j].x, w[j]});
        return out;
    };
    for (std::size_t i = 0; i < spec.times.size(); ++i) {
        for (int k = 0; k <= spec.times[i]; ++k) {
            for (std::size_t a = 0; a < m.atoms(k).size(); ++a) {
                const std::size_t node = m.atoms(k)[a];
                F mass = detail::atom_mass(m, q, node);
                if (field_traits<F>::is_zero(mass)) continue;
                auto w = detail::joint_law(mm, q, i, node);
                const auto& got = eta.eta[i].at(static_cast<std::size_t>(k)).at(a);
                if (!w || got.size() != w->size()) {
                    r.law_ok = false;
                    continue;
                }
                for (std::size_t j = 0; j < w->size(); ++j)
                    if (!field_traits<F>::eq((*w)[j], mass * got[j])) r.law_ok = false;
            }
        }
    }
    if (spec.dim() != 1) throw DimensionUnsupported("convex order of conditional laws is only checked in one dimension");
    for (std::size_t i = 0; i < spec.times.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            for (int k = 0; k <= spec.times[j]; ++k) {
                for (std::size_t a = 0; a < m.atoms(k).size(); ++a) {
                    if (field_traits<F>::is_zero(detail::atom_mass(m, q, m.atoms(k)[a]))) continue;
                    auto lo = as_measure(j, eta.eta[j].at(static_cast<std::size_t>(k)).at(a));
                    auto hi = as_measure(i, eta.eta[i].at(static_cast<std::size_t>(k)).at(a));
                    if (!field_traits<F>::eq(detail::mean(lo), detail::mean(hi)) || detail::convex_order_violation(lo, hi))
                        r.order_ok = false;
                }
            }
        }
    }
    return r;
}

}  // namespace amerdual
