#pragma once

#include "amerdual/dual.hpp"

#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace amerdual {

/// sup of E^Q[ξ] over martingale measures on each time-k atom, one value per
/// atoms(k) entry. Statics are not imposed. -inf where every martingale
/// measure on the atom charges a -inf path.
template <Field F>
std::vector<ExtReal<F>> operator_E_k(const FiniteFilteredMarket<F>& m, int k, const std::vector<ExtReal<F>>& xi) {
    if (k < 0 || k > m.horizon()) throw MalformedInput("operator_E_k: time " + std::to_string(k) + " out of range");
    if (xi.size() != m.num_paths()) throw MalformedInput("operator_E_k: claim does not cover every path");
    const auto& atoms = m.atoms(k);
    std::vector<ExtReal<F>> out(atoms.size());
    if (k == m.horizon()) {
        for (std::size_t a = 0; a < atoms.size(); ++a) out[a] = xi[m.path_range(atoms[a]).first];
        return out;
    }
    std::vector<bool> allowed(m.num_paths());
    for (std::size_t p = 0; p < xi.size(); ++p) allowed[p] = xi[p].has_value();
    parallel_for(atoms.size(), [&](std::size_t a) {
        lp::Builder<F> b(lp::Sense::Max);
        auto var = detail::add_martingale_measure(b, m, allowed, false, atoms[a]);
        for (std::size_t p = 0; p < xi.size(); ++p) if (var[p]) b.set_cost(*var[p], *xi[p]);
        auto sol = lp::solve(b.build());
        if (sol.status == lp::Status::Infeasible) return;
        if (!sol.optimal()) throw NumericalFailure("operator_E_k: LP over a simplex reported unbounded");
        out[a] = *sol.objective_value;
    });
    return out;
}

namespace detail {

/// Spreads per-atom values at time k back onto paths.
template <Field F>
std::vector<ExtReal<F>> on_paths(const FiniteFilteredMarket<F>& m, int k, const std::vector<ExtReal<F>>& per_atom) {
    std::vector<ExtReal<F>> out(m.num_paths());
    const auto& atoms = m.atoms(k);
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        auto [b, e] = m.path_range(atoms[a]);
        for (std::size_t p = b; p < e; ++p) out[p] = per_atom[a];
    }
    return out;
}

template <Field F>
std::vector<ExtReal<F>> conditional_sup(const FiniteFilteredMarket<F>& m, int k, const std::vector<ExtReal<F>>& xi) {
    return on_paths(m, k, operator_E_k(m, k, xi));
}

}  // namespace detail

template <Field F>
struct SnellEnvelope {
    std::vector<std::vector<ExtReal<F>>> levels;  // levels[k][a]: Ē^k(Φ) on atom a of the enlarged time-k filtration
    std::vector<ExtReal<F>> terminal;             // Φ on enlarged points

    [[nodiscard]] const ExtReal<F>& value() const { return levels.front().front(); }
};

/// Backward recursion Ē^k = Ē_k ∘ Ē^{k+1} on the enlarged space, Ē^N = Φ.
template <Field F>
SnellEnvelope<F> snell_enlarged(const EnlargedMarket<F>& mb, const AmericanPayoff<F>& phi) {
    const auto& m = mb.base();
    check_payoff(m, phi);
    const int N = m.horizon();
    SnellEnvelope<F> env;
    env.terminal = payoff_on_points(mb, phi);
    env.levels.resize(static_cast<std::size_t>(N));
    std::vector<ExtReal<F>> psi = env.terminal;
    auto section = [&](int theta) {
        std::vector<ExtReal<F>> xi(m.num_paths());
        for (std::size_t p = 0; p < xi.size(); ++p) xi[p] = psi[mb.point_index(p, theta)];
        return xi;
    };
    for (int k = N - 1; k >= 0; --k) {
        std::vector<ExtReal<F>> next(mb.num_points());
        if (k == 0) {
            auto e = detail::conditional_sup(m, 0, section(1));
            for (std::size_t pt = 0; pt < next.size(); ++pt) next[pt] = e[mb.point(pt).first];
        } else {
            std::vector<std::vector<ExtReal<F>>> e(static_cast<std::size_t>(k) + 2);
            for (int th = 1; th <= k + 1; ++th) e[static_cast<std::size_t>(th)] = detail::conditional_sup(m, k, section(th));
            for (std::size_t pt = 0; pt < next.size(); ++pt) {
                auto [p, th] = mb.point(pt);
                next[pt] = th < k ? e[static_cast<std::size_t>(th)][p]
                                  : ext_max<F>(e[static_cast<std::size_t>(k)][p], e[static_cast<std::size_t>(k) + 1][p]);
            }
        }
        auto& level = env.levels[static_cast<std::size_t>(k)];
        for (std::size_t a = 0; a < mb.atoms(k).size(); ++a) level.push_back(next[mb.atom_points(k, a).front()]);
        psi = std::move(next);
    }
    return env;
}

/// τ*(ω) = first k with E_k(Φ_k)(ω) = Ē^k(Φ)(ω,k).
template <Field F>
StoppingRule optimal_tau_star(const EnlargedMarket<F>& mb, const AmericanPayoff<F>& phi, const SnellEnvelope<F>& env) {
    const auto& m = mb.base();
    check_payoff(m, phi);
    const int N = m.horizon();
    if (env.levels.size() != static_cast<std::size_t>(N)) throw MalformedInput("Snell envelope has wrong horizon");
    StoppingRule r{std::vector<int>(m.num_paths(), 0)};
    for (int k = 1; k <= N; ++k) {
        const auto& row = phi.values[static_cast<std::size_t>(k - 1)];
        auto exercise = k < N ? detail::conditional_sup(m, k, row) : row;
        for (std::size_t p = 0; p < m.num_paths(); ++p) {
            if (r.tau[p] != 0) continue;
            const std::size_t pt = mb.point_index(p, k);
            const ExtReal<F>& cont = k < N ? env.levels[static_cast<std::size_t>(k)][mb.atom_of(pt, k)] : env.terminal[pt];
            if (ext_eq<F>(exercise[p], cont)) r.tau[p] = k;
        }
    }
    for (std::size_t p = 0; p < m.num_paths(); ++p) {
        if (r.tau[p] == 0) throw NoStopFound("no exercise date matches the Snell envelope on path " + std::to_string(m.path_id(p)));
    }
    return r;
}

/// Finite dynamic extension built on the support of one calibrated enlarged
/// measure. Nodes at time k are distinct (parent, time-k node of Ω, Y_k);
/// Y is the conditional price of the normalized statics.
template <Field F>
struct DynamicExtension {
    FiniteFilteredMarket<F> base;
    FiniteFilteredMarket<F> market;              // assets (S, Y), no statics
    std::vector<std::size_t> projection;         // extension path -> path of base
    EnlargedMeasure<F> source_measure;           // on enlarge(market)
    std::vector<F> y_offsets;                    // static prices: Y + offset is the quoted price

    [[nodiscard]] std::size_t base_dim() const { return base.dim(); }
    [[nodiscard]] PathMeasure<F> pushforward() const {
        const auto N = static_cast<std::size_t>(market.horizon());
        PathMeasure<F> q{std::vector<F>(market.num_paths(), F(0))};
        for (std::size_t pt = 0; pt < source_measure.weights.size(); ++pt) q.weights[pt / N] += source_measure.weights[pt];
        return q;
    }
};

namespace detail {

/// Why qb is not a calibrated martingale measure on the enlarged space, if it is not.
template <Field F>
std::optional<std::string> enlarged_membership(const EnlargedMarket<F>& mb, const EnlargedMeasure<F>& qb) {
    const auto& m = mb.base();
    if (qb.weights.size() != mb.num_points()) return "measure has " + std::to_string(qb.weights.size()) + " weights for " + std::to_string(mb.num_points()) + " points";
    F total(0);
    for (const F& w : qb.weights) {
        if (field_traits<F>::negative(w)) return std::string("measure has a negative weight");
        total += w;
    }
    if (!field_traits<F>::eq(total, F(1))) return "measure has total mass " + field_traits<F>::render(total);
    for (int k = 1; k <= m.horizon(); ++k) {
        for (std::size_t at = 0; at < mb.atoms(k - 1).size(); ++at) {
            for (std::size_t a = 0; a < m.dim(); ++a) {
                F s(0);
                for (std::size_t pt : mb.atom_points(k - 1, at)) s += qb.weights[pt] * m.increment(mb.point(pt).first, k, a);
                if (!field_traits<F>::is_zero(s)) {
                    const auto& atom = mb.atoms(k - 1)[at];
                    return "asset " + std::to_string(a) + " drifts by " + field_traits<F>::render(s) + " on node " +
                           std::to_string(m.node_id(atom.node)) + " theta " + std::to_string(atom.theta_lo) + ".." +
                           std::to_string(atom.theta_hi) + " over step " + std::to_string(k);
                }
            }
        }
    }
    for (std::size_t s = 0; s < m.num_statics(); ++s) {
        F v(0);
        for (std::size_t pt = 0; pt < mb.num_points(); ++pt) v += qb.weights[pt] * m.static_net(s, mb.point(pt).first);
        if (!field_traits<F>::is_zero(v)) return "static " + std::to_string(s) + " has expected net payoff " + field_traits<F>::render(v);
    }
    return std::nullopt;
}

}  // namespace detail

template <Field F>
DynamicExtension<F> build_dynamic_extension(const FiniteFilteredMarket<F>& m, const EnlargedMeasure<F>& qb) {
    auto mb = enlarge(m);
    if (auto why = detail::enlarged_membership(mb, qb)) throw NotCalibrated("extension source measure: " + *why);
    const int N = m.horizon();
    const std::size_t e = m.num_statics();

    // Y_k per point: conditional expectation of the normalized statics on its enlarged atom.
    auto y_at = [&](std::size_t pt, int k) {
        const std::size_t a = mb.atom_of(pt, k);
        F mass(0);
        std::vector<F> num(e, F(0));
        for (std::size_t q : mb.atom_points(k, a)) {
            if (field_traits<F>::is_zero(qb.weights[q])) continue;
            mass += qb.weights[q];
            for (std::size_t s = 0; s < e; ++s) num[s] += qb.weights[q] * m.static_net(s, mb.point(q).first);
        }
        for (auto& v : num) v /= mass;
        return num;
    };

    MarketData<F> d;
    d.name = m.name() + "-extension";
    d.horizon = N;
    std::vector<F> root_assets = m.assets(m.root());
    root_assets.insert(root_assets.end(), e, F(0));
    d.nodes.push_back({0, 0, std::nullopt, root_assets});
    std::map<std::tuple<int, std::size_t, std::vector<F>>, int> index;
    std::map<int, std::size_t> leaf_path_of;
    std::vector<std::pair<int, std::size_t>> point_leaf;  // (extension leaf id, point)
    for (std::size_t pt = 0; pt < mb.num_points(); ++pt) {
        if (field_traits<F>::is_zero(qb.weights[pt])) continue;
        const std::size_t path = mb.point(pt).first;
        int parent = 0;
        for (int k = 1; k <= N; ++k) {
            auto y = y_at(pt, k);
            const std::size_t node = m.ancestor(path, k);
            auto key = std::make_tuple(parent, node, y);
            auto it = index.find(key);
            if (it == index.end()) {
                const int id = static_cast<int>(d.nodes.size());
                std::vector<F> assets = m.assets(node);
                assets.insert(assets.end(), y.begin(), y.end());
                d.nodes.push_back({id, k, parent, assets});
                it = index.emplace(key, id).first;
            }
            parent = it->second;
        }
        leaf_path_of[parent] = path;
        point_leaf.emplace_back(parent, pt);
    }
    DynamicExtension<F> ext{m, FiniteFilteredMarket<F>(std::move(d)), {}, {}, {}};
    for (std::size_t s = 0; s < e; ++s) ext.y_offsets.push_back(m.static_price(s));
    const auto& xm = ext.market;
    ext.projection.resize(xm.num_paths());
    for (std::size_t p = 0; p < xm.num_paths(); ++p) ext.projection[p] = leaf_path_of.at(xm.path_id(p));
    auto xb = enlarge(xm);
    ext.source_measure.weights.assign(xb.num_points(), F(0));
    for (auto [leaf, pt] : point_leaf) {
        const std::size_t xp = *xm.path_of_id(leaf);
        ext.source_measure.weights[xb.point_index(xp, mb.point(pt).second)] += qb.weights[pt];
    }
    return ext;
}

/// Φ read through the projection.
template <Field F>
AmericanPayoff<F> pull_back(const DynamicExtension<F>& ext, const AmericanPayoff<F>& phi) {
    AmericanPayoff<F> out;
    for (const auto& row : phi.values) {
        out.values.emplace_back();
        for (std::size_t p : ext.projection) out.values.back().push_back(row[p]);
    }
    return out;
}

template <Field F>
struct ExtensionCheck {
    ExtReal<F> strong_value_hat;
    F primal;
    bool realizes = false;
    std::optional<StoppingRule> tau_hat;
};

template <Field F>
ExtensionCheck<F> verify_extension(const DynamicExtension<F>& ext, const AmericanPayoff<F>& phi,
                                   std::uint64_t cap = 1000000) {
    check_payoff(ext.base, phi);
    auto s = strong_value(ext.market, pull_back(ext, phi), cap);
    ExtensionCheck<F> out{s.value, price_american(ext.base, phi, true).value, false, std::nullopt};
    out.realizes = s.value && field_traits<F>::eq(*s.value, out.primal);
    if (s.value) out.tau_hat = s.tau;
    return out;
}

template <Field F>
struct ExtensionOutcome {
    DynamicExtension<F> extension;
    ExtensionCheck<F> check;
    int attempts = 0;
};

/// Builds the extension from an optimal weak-dual measure and verifies it. If
/// the strong value on the extension falls short, re-solves the weak LP on
/// its optimal face with a seeded random secondary objective, up to `retries`
/// more times.
template <Field F>
ExtensionOutcome<F> extend_and_verify(const FiniteFilteredMarket<F>& m, const AmericanPayoff<F>& phi,
                                      int retries = 8, std::uint64_t seed = 0, std::uint64_t cap = 1000000) {
    auto mb = enlarge(m);
    auto w = weak_value(mb, phi);
    if (!w.value) throw NoCalibratedMeasure("payoff is -inf under every calibrated enlarged measure");
    auto ext = build_dynamic_extension(m, *w.measure);
    auto check = verify_extension(ext, phi, cap);
    int attempts = 1;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coef(-5, 5);
    const auto values = payoff_on_points(mb, phi);
    while (!check.realizes && attempts <= retries) {
        auto lp = detail::weak_lp(mb, values, true);
        std::vector<typename lp::Builder<F>::Term> face;
        for (std::size_t pt = 0; pt < mb.num_points(); ++pt) {
            if (!lp.var[pt]) continue;
            face.emplace_back(*lp.var[pt], *values[pt]);
            lp.builder.set_cost(*lp.var[pt], F(coef(rng)));
        }
        lp.builder.add_eq(std::move(face), *w.value);
        auto sol = lp::solve(lp.builder.build());
        ++attempts;
        if (!sol.optimal()) continue;
        auto candidate = build_dynamic_extension(m, detail::read_enlarged(lp.var, sol.x));
        auto c = verify_extension(candidate, phi, cap);
        ext = std::move(candidate);
        check = std::move(c);
    }
    return {std::move(ext), std::move(check), attempts};
}

}  // namespace amerdual
