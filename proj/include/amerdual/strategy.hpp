#pragma once

#include "amerdual/lp.hpp"
#include "amerdual/market.hpp"

#include <cstddef>
#include <vector>

namespace amerdual {

/// H[k-1][atom][asset]: position held over (k-1, k], one vector per atom of
/// the time k-1 partition.
template <Field F>
struct PredictableStrategy {
    std::vector<std::vector<std::vector<F>>> H;
};

/// One strategy per exercise date plus static weights. Branches agree on
/// every position taken up to their exercise date.
template <Field F>
struct AmericanStrategy {
    std::vector<PredictableStrategy<F>> branches;
    std::vector<F> h;
};

/// Strategy on Ω̄; H is indexed by the atoms of the enlarged filtration.
template <Field F>
struct EnlargedStrategy {
    PredictableStrategy<F> H;
    std::vector<F> h;
};

/// (H ∘ S)_N(ω).
template <Field F>
F stochastic_integral(const FiniteFilteredMarket<F>& m, const PredictableStrategy<F>& s, std::size_t path) {
    F g(0);
    for (int k = 1; k <= m.horizon(); ++k) {
        const auto& pos = s.H[static_cast<std::size_t>(k - 1)][m.atom_position(m.ancestor(path, k - 1))];
        for (std::size_t a = 0; a < m.dim(); ++a) g += pos[a] * m.increment(path, k, a);
    }
    return g;
}

template <Field F>
F static_gain(const FiniteFilteredMarket<F>& m, const std::vector<F>& h, std::size_t path) {
    F g(0);
    for (std::size_t s = 0; s < h.size(); ++s) g += h[s] * m.static_net(s, path);
    return g;
}

template <Field F>
F stochastic_integral(const EnlargedMarket<F>& mb, const PredictableStrategy<F>& s, std::size_t point) {
    const auto& m = mb.base();
    const std::size_t path = mb.point(point).first;
    F g(0);
    for (int k = 1; k <= m.horizon(); ++k) {
        const auto& pos = s.H[static_cast<std::size_t>(k - 1)][mb.atom_of(point, k - 1)];
        for (std::size_t a = 0; a < m.dim(); ++a) g += pos[a] * m.increment(path, k, a);
    }
    return g;
}

namespace detail {

/// Free LP variables for a predictable strategy: one block of d per atom of
/// each partition F_0..F_{N-1} (or their enlarged counterparts).
template <Field F>
class PredictableVars {
public:
    PredictableVars(lp::Builder<F>& b, const std::vector<std::size_t>& atoms_per_level, std::size_t d) : d_(d) {
        for (std::size_t n : atoms_per_level) {
            first_.emplace_back();
            for (std::size_t i = 0; i < n; ++i) {
                first_.back().push_back(b.num_vars());
                for (std::size_t a = 0; a < d; ++a) b.add_variable(lp::Bound<F>::free());
            }
        }
    }

    [[nodiscard]] std::size_t var(int k, std::size_t atom, std::size_t a) const {
        return first_[static_cast<std::size_t>(k - 1)][atom] + a;
    }

    /// Adds the gain terms of a path whose time-(k-1) atom is atom_at(k-1).
    template <class AtomAt>
    void append_gain(std::vector<typename lp::Builder<F>::Term>& terms, const FiniteFilteredMarket<F>& m,
                     std::size_t path, AtomAt atom_at) const {
        for (int k = 1; k <= m.horizon(); ++k) {
            const std::size_t atom = atom_at(k - 1);
            for (std::size_t a = 0; a < d_; ++a) {
                F inc = m.increment(path, k, a);
                if (!field_traits<F>::is_zero(inc)) terms.emplace_back(var(k, atom, a), std::move(inc));
            }
        }
    }

    [[nodiscard]] PredictableStrategy<F> extract(const std::vector<F>& x) const {
        PredictableStrategy<F> s;
        for (const auto& level : first_) {
            s.H.emplace_back();
            for (std::size_t f : level) s.H.back().emplace_back(x.begin() + static_cast<std::ptrdiff_t>(f),
                                                                x.begin() + static_cast<std::ptrdiff_t>(f + d_));
        }
        return s;
    }

private:
    std::size_t d_;
    std::vector<std::vector<std::size_t>> first_;
};

template <Field F>
std::vector<std::size_t> atom_counts(const FiniteFilteredMarket<F>& m) {
    std::vector<std::size_t> n;
    for (int k = 0; k < m.horizon(); ++k) n.push_back(m.atoms(k).size());
    return n;
}

template <Field F>
std::vector<std::size_t> atom_counts(const EnlargedMarket<F>& mb) {
    std::vector<std::size_t> n;
    for (int k = 0; k < mb.horizon(); ++k) n.push_back(mb.atoms(k).size());
    return n;
}

/// Free variables for static weights; empty when statics are not used.
template <Field F>
std::vector<std::size_t> add_static_vars(lp::Builder<F>& b, std::size_t count) {
    std::vector<std::size_t> v;
    for (std::size_t s = 0; s < count; ++s) v.push_back(b.add_variable(lp::Bound<F>::free()));
    return v;
}

template <Field F>
void append_static_gain(std::vector<typename lp::Builder<F>::Term>& terms, const FiniteFilteredMarket<F>& m,
                        const std::vector<std::size_t>& vars, std::size_t path) {
    for (std::size_t s = 0; s < vars.size(); ++s) {
        F g = m.static_net(s, path);
        if (!field_traits<F>::is_zero(g)) terms.emplace_back(vars[s], std::move(g));
    }
}

template <Field F>
std::vector<F> pick(const std::vector<F>& x, const std::vector<std::size_t>& vars) {
    std::vector<F> out;
    for (std::size_t v : vars) out.push_back(x[v]);
    return out;
}

}  // namespace detail
}  // namespace amerdual
