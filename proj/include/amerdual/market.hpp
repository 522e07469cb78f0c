#pragma once

#include "amerdual/errors.hpp"
#include "amerdual/scalar.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace amerdual {

template <Field F>
struct NodeSpec {
    int id = 0;
    int time = 0;
    std::optional<int> parent;
    std::vector<F> assets;
};

/// European claim traded only at time 0. Payoff is keyed by terminal node id;
/// absent paths pay 0.
template <Field F>
struct StaticOption {
    std::map<int, F> payoff;
    F price = F(0);
};

/// Raw description of a finite filtered market, as read from a model file.
template <Field F>
struct MarketData {
    std::string name;
    int horizon = 0;
    std::vector<NodeSpec<F>> nodes;
    std::vector<StaticOption<F>> statics;
};

enum class ViolationKind {
    Horizon,
    DuplicateId,
    RootCount,
    UnknownParent,
    TimeRange,
    TreeShape,
    MissingChildren,
    AssetDimension,
    StaticPath,
};

inline const char* to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::Horizon: return "Horizon";
        case ViolationKind::DuplicateId: return "DuplicateId";
        case ViolationKind::RootCount: return "RootCount";
        case ViolationKind::UnknownParent: return "UnknownParent";
        case ViolationKind::TimeRange: return "TimeRange";
        case ViolationKind::TreeShape: return "TreeShape";
        case ViolationKind::MissingChildren: return "MissingChildren";
        case ViolationKind::AssetDimension: return "AssetDimension";
        case ViolationKind::StaticPath: return "StaticPath";
    }
    return "?";
}

struct Violation {
    ViolationKind kind;
    std::vector<int> node_ids;
    std::string message;
};

/// Checks every structural invariant of the event tree; returns one entry per problem.
template <Field F>
std::vector<Violation> validate(const MarketData<F>& m) {
    std::vector<Violation> out;
    if (m.horizon < 1) out.push_back({ViolationKind::Horizon, {}, "horizon must be >= 1"});

    std::unordered_map<int, std::size_t> by_id;
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
        if (!by_id.emplace(m.nodes[i].id, i).second) {
            out.push_back({ViolationKind::DuplicateId, {m.nodes[i].id}, "node id used more than once"});
        }
    }
    std::vector<int> roots;
    for (const auto& n : m.nodes) {
        if (n.time < 0 || n.time > m.horizon) {
            out.push_back({ViolationKind::TimeRange, {n.id}, "node time outside 0..horizon"});
        }
        if (!n.parent) {
            roots.push_back(n.id);
            if (n.time != 0) out.push_back({ViolationKind::TreeShape, {n.id}, "parentless node must have time 0"});
            continue;
        }
        auto it = by_id.find(*n.parent);
        if (it == by_id.end()) {
            out.push_back({ViolationKind::UnknownParent, {n.id, *n.parent}, "parent id does not exist"});
            continue;
        }
        const auto& p = m.nodes[it->second];
        if (p.time != n.time - 1) {
            out.push_back({ViolationKind::TreeShape, {n.id, p.id},
                           "parent has time " + std::to_string(p.time) + ", expected " + std::to_string(n.time - 1)});
        }
    }
    if (roots.size() != 1) {
        out.push_back({ViolationKind::RootCount, roots,
                       "expected exactly one root, found " + std::to_string(roots.size())});
    }

    std::set<int> has_child;
    for (const auto& n : m.nodes) if (n.parent) has_child.insert(*n.parent);
    for (const auto& n : m.nodes) {
        if (n.time < m.horizon && !has_child.count(n.id)) {
            out.push_back({ViolationKind::MissingChildren, {n.id}, "non-terminal node has no children"});
        }
    }

    if (!m.nodes.empty()) {
        const std::size_t d = m.nodes.front().assets.size();
        if (d == 0) out.push_back({ViolationKind::AssetDimension, {m.nodes.front().id}, "node has no asset values"});
        for (const auto& n : m.nodes) {
            if (n.assets.size() != d) {
                out.push_back({ViolationKind::AssetDimension, {n.id},
                               "node has " + std::to_string(n.assets.size()) + " asset values, expected " +
                                   std::to_string(d)});
            }
        }
    }

    for (std::size_t s = 0; s < m.statics.size(); ++s) {
        for (const auto& [id, v] : m.statics[s].payoff) {
            auto it = by_id.find(id);
            if (it == by_id.end() || m.nodes[it->second].time != m.horizon) {
                out.push_back({ViolationKind::StaticPath, {id},
                               "static " + std::to_string(s) + " pays on a node that is not terminal"});
            }
        }
    }
    return out;
}

class InvalidMarket : public InputError {
public:
    explicit InvalidMarket(std::vector<Violation> v) : InputError(describe(v)), violations(std::move(v)) {}
    std::vector<Violation> violations;

private:
    static std::string describe(const std::vector<Violation>& v) {
        std::string s = "invalid market:";
        for (const auto& x : v) {
            s += std::string(" [") + to_string(x.kind) + " nodes";
            for (int id : x.node_ids) s += " " + std::to_string(id);
            s += ": " + x.message + "]";
        }
        return s;
    }
};

/// Validated, indexed event tree. Terminal nodes are the scenarios Ω and the
/// time-k nodes are the atoms of F_k. Paths are numbered in depth-first order
/// with children visited by increasing id, so every node owns a contiguous
/// range of paths.
template <Field F>
class FiniteFilteredMarket {
public:
    explicit FiniteFilteredMarket(MarketData<F> data) : data_(std::move(data)) {
        auto v = validate(data_);
        if (!v.empty()) throw InvalidMarket(std::move(v));
        index();
    }

    [[nodiscard]] const MarketData<F>& data() const { return data_; }
    [[nodiscard]] const std::string& name() const { return data_.name; }
    [[nodiscard]] int horizon() const { return data_.horizon; }
    [[nodiscard]] std::size_t dim() const { return data_.nodes.front().assets.size(); }
    [[nodiscard]] std::size_t num_paths() const { return leaves_.size(); }
    [[nodiscard]] std::size_t num_nodes() const { return data_.nodes.size(); }
    [[nodiscard]] std::size_t num_statics() const { return data_.statics.size(); }

    [[nodiscard]] std::size_t root() const { return root_; }
    [[nodiscard]] int time(std::size_t node) const { return data_.nodes[node].time; }
    [[nodiscard]] int node_id(std::size_t node) const { return data_.nodes[node].id; }
    [[nodiscard]] std::optional<std::size_t> parent(std::size_t node) const { return parent_[node]; }
    [[nodiscard]] const std::vector<F>& assets(std::size_t node) const { return data_.nodes[node].assets; }
    [[nodiscard]] const std::vector<std::size_t>& children(std::size_t node) const { return children_[node]; }

    /// Atoms of F_k, i.e. the time-k nodes in path order.
    [[nodiscard]] const std::vector<std::size_t>& atoms(int k) const { return atoms_.at(static_cast<std::size_t>(k)); }
    [[nodiscard]] std::size_t atom_position(std::size_t node) const { return atom_pos_[node]; }
    [[nodiscard]] std::pair<std::size_t, std::size_t> path_range(std::size_t node) const { return range_[node]; }

    [[nodiscard]] std::size_t leaf(std::size_t path) const { return leaves_[path]; }
    [[nodiscard]] int path_id(std::size_t path) const { return node_id(leaves_[path]); }
    [[nodiscard]] std::optional<std::size_t> path_of_id(int id) const {
        auto it = path_by_id_.find(id);
        if (it == path_by_id_.end()) return std::nullopt;
        return it->second;
    }
    [[nodiscard]] std::optional<std::size_t> node_of_id(int id) const {
        auto it = node_by_id_.find(id);
        if (it == node_by_id_.end()) return std::nullopt;
        return it->second;
    }

    [[nodiscard]] std::size_t ancestor(std::size_t path, int k) const {
        return ancestors_[path][static_cast<std::size_t>(k)];
    }
    [[nodiscard]] const F& asset(std::size_t path, int k, std::size_t a) const {
        return assets(ancestor(path, k))[a];
    }
    /// S_k - S_{k-1} along a path.
    [[nodiscard]] F increment(std::size_t path, int k, std::size_t a) const {
        return asset(path, k, a) - asset(path, k - 1, a);
    }

    [[nodiscard]] const F& static_price(std::size_t s) const { return data_.statics[s].price; }
    [[nodiscard]] F static_payoff(std::size_t s, std::size_t path) const {
        const auto& p = data_.statics[s].payoff;
        auto it = p.find(path_id(path));
        return it == p.end() ? F(0) : it->second;
    }
    /// Payoff shifted by its price, so that the claim costs nothing at time 0.
    [[nodiscard]] F static_net(std::size_t s, std::size_t path) const {
        return static_payoff(s, path) - static_price(s);
    }

private:
    void index() {
        const std::size_t n = data_.nodes.size();
        parent_.assign(n, std::nullopt);
        children_.assign(n, {});
        for (std::size_t i = 0; i < n; ++i) node_by_id_[data_.nodes[i].id] = i;
        for (std::size_t i = 0; i < n; ++i) {
            if (data_.nodes[i].parent) {
                std::size_t p = node_by_id_.at(*data_.nodes[i].parent);
                parent_[i] = p;
                children_[p].push_back(i);
            } else {
                root_ = i;
            }
        }
        for (auto& c : children_) {
            std::sort(c.begin(), c.end(),
                      [&](std::size_t a, std::size_t b) { return data_.nodes[a].id < data_.nodes[b].id; });
        }
        atoms_.assign(static_cast<std::size_t>(data_.horizon) + 1, {});
        atom_pos_.assign(n, 0);
        range_.assign(n, {0, 0});
        dfs(root_);
        ancestors_.assign(leaves_.size(), std::vector<std::size_t>(static_cast<std::size_t>(data_.horizon) + 1));
        for (std::size_t p = 0; p < leaves_.size(); ++p) {
            std::optional<std::size_t> cur = leaves_[p];
            while (cur) {
                ancestors_[p][static_cast<std::size_t>(time(*cur))] = *cur;
                cur = parent_[*cur];
            }
            path_by_id_[path_id(p)] = p;
        }
    }

    void dfs(std::size_t node) {
        auto& level = atoms_[static_cast<std::size_t>(time(node))];
        atom_pos_[node] = level.size();
        level.push_back(node);
        const std::size_t begin = leaves_.size();
        if (time(node) == data_.horizon) {
            leaves_.push_back(node);
        } else {
            for (std::size_t c : children_[node]) dfs(c);
        }
        range_[node] = {begin, leaves_.size()};
    }

    MarketData<F> data_;
    std::size_t root_ = 0;
    std::vector<std::optional<std::size_t>> parent_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::vector<std::size_t>> atoms_;
    std::vector<std::size_t> atom_pos_;
    std::vector<std::pair<std::size_t, std::size_t>> range_;
    std::vector<std::size_t> leaves_;
    std::vector<std::vector<std::size_t>> ancestors_;
    std::unordered_map<int, std::size_t> node_by_id_;
    std::unordered_map<int, std::size_t> path_by_id_;
};

/// Φ_k(ω) for k = 1..N, delivered at N when exercised at k. nullopt = -inf
/// (date not exercisable on that path).
template <Field F>
struct AmericanPayoff {
    std::vector<std::vector<ExtReal<F>>> values;  // [k-1][path]

    [[nodiscard]] int horizon() const { return static_cast<int>(values.size()); }
    [[nodiscard]] const ExtReal<F>& at(int k, std::size_t path) const {
        return values[static_cast<std::size_t>(k - 1)][path];
    }

    static AmericanPayoff constant(int horizon, std::size_t paths, const F& c) {
        return {std::vector<std::vector<ExtReal<F>>>(static_cast<std::size_t>(horizon),
                                                     std::vector<ExtReal<F>>(paths, c))};
    }

    /// Embeds a European claim: -inf before N, ξ at N.
    static AmericanPayoff european(int horizon, const std::vector<ExtReal<F>>& xi) {
        AmericanPayoff p{std::vector<std::vector<ExtReal<F>>>(static_cast<std::size_t>(horizon),
                                                             std::vector<ExtReal<F>>(xi.size(), std::nullopt))};
        p.values.back() = xi;
        return p;
    }
};

template <Field F>
void check_payoff(const FiniteFilteredMarket<F>& m, const AmericanPayoff<F>& phi) {
    if (phi.horizon() != m.horizon()) {
        throw MalformedInput("payoff has " + std::to_string(phi.horizon()) + " exercise dates, market horizon is " +
                             std::to_string(m.horizon()));
    }
    for (int k = 1; k <= m.horizon(); ++k) {
        if (phi.values[static_cast<std::size_t>(k - 1)].size() != m.num_paths()) {
            throw MalformedInput("payoff date " + std::to_string(k) + " does not cover every path");
        }
    }
}

/// Probability weights on Ω, indexed by path.
template <Field F>
struct PathMeasure {
    std::vector<F> weights;
};

/// Probability weights on Ω × {1..N}, indexed by EnlargedMarket::point_index.
template <Field F>
struct EnlargedMeasure {
    std::vector<F> weights;
};

/// Shifts every static payoff by its price and sets the price to zero.
template <Field F>
FiniteFilteredMarket<F> normalize_statics(const FiniteFilteredMarket<F>& m) {
    MarketData<F> d = m.data();
    for (std::size_t s = 0; s < d.statics.size(); ++s) {
        StaticOption<F> out;
        for (std::size_t p = 0; p < m.num_paths(); ++p) {
            F v = m.static_net(s, p);
            if (!field_traits<F>::is_zero(v)) out.payoff[m.path_id(p)] = v;
        }
        out.price = F(0);
        d.statics[s] = std::move(out);
    }
    return FiniteFilteredMarket<F>(std::move(d));
}

/// One atom of the enlarged filtration at time k: a time-k node crossed with
/// the exercise dates [theta_lo, theta_hi].
struct EnlargedAtom {
    std::size_t node;
    int theta_lo;
    int theta_hi;
};

/// Ω̄ = Ω × {1..N} with canonical time T(ω,θ) = θ. The time-k atoms are the
/// F_k atoms crossed with {1},…,{k},{k+1..N}.
template <Field F>
class EnlargedMarket {
public:
    explicit EnlargedMarket(FiniteFilteredMarket<F> base) : base_(std::move(base)) {
        const int N = base_.horizon();
        atoms_.resize(static_cast<std::size_t>(N) + 1);
        for (int k = 0; k <= N; ++k) {
            for (std::size_t node : base_.atoms(k)) {
                for (int th = 1; th <= std::min(k, N); ++th) atoms_[static_cast<std::size_t>(k)].push_back({node, th, th});
                if (k < N) atoms_[static_cast<std::size_t>(k)].push_back({node, k + 1, N});
            }
        }
    }

    [[nodiscard]] const FiniteFilteredMarket<F>& base() const { return base_; }
    [[nodiscard]] int horizon() const { return base_.horizon(); }
    [[nodiscard]] std::size_t num_points() const { return base_.num_paths() * static_cast<std::size_t>(horizon()); }
    [[nodiscard]] std::size_t point_index(std::size_t path, int theta) const {
        return path * static_cast<std::size_t>(horizon()) + static_cast<std::size_t>(theta - 1);
    }
    [[nodiscard]] std::pair<std::size_t, int> point(std::size_t p) const {
        const auto N = static_cast<std::size_t>(horizon());
        return {p / N, static_cast<int>(p % N) + 1};
    }

    [[nodiscard]] const std::vector<EnlargedAtom>& atoms(int k) const { return atoms_.at(static_cast<std::size_t>(k)); }

    /// Index into atoms(k) of the atom holding point p.
    [[nodiscard]] std::size_t atom_of(std::size_t p, int k) const {
        auto [path, theta] = point(p);
        const std::size_t pos = base_.atom_position(base_.ancestor(path, k));
        if (k == horizon()) return pos * static_cast<std::size_t>(horizon()) + static_cast<std::size_t>(theta - 1);
        const auto width = static_cast<std::size_t>(k) + 1;
        return pos * width + static_cast<std::size_t>(theta <= k ? theta - 1 : k);
    }

    [[nodiscard]] std::vector<std::size_t> atom_points(int k, std::size_t a) const {
        const EnlargedAtom& at = atoms(k)[a];
        auto [b, e] = base_.path_range(at.node);
        std::vector<std::size_t> pts;
        for (std::size_t path = b; path < e; ++path)
            for (int th = at.theta_lo; th <= at.theta_hi; ++th) pts.push_back(point_index(path, th));
        return pts;
    }

private:
    FiniteFilteredMarket<F> base_;
    std::vector<std::vector<EnlargedAtom>> atoms_;
};

template <Field F>
EnlargedMarket<F> enlarge(const FiniteFilteredMarket<F>& m) {
    return EnlargedMarket<F>(m);
}

/// Φ read as a function on Ω̄: Φ(ω,θ) = Φ_θ(ω).
template <Field F>
std::vector<ExtReal<F>> payoff_on_points(const EnlargedMarket<F>& mb, const AmericanPayoff<F>& phi) {
    std::vector<ExtReal<F>> out(mb.num_points());
    for (std::size_t p = 0; p < out.size(); ++p) {
        auto [path, theta] = mb.point(p);
        out[p] = phi.at(theta, path);
    }
    return out;
}

}  // namespace amerdual
