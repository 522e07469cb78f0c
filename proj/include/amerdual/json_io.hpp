#pragma once

// Model files, schema "amerdual/1". Scalars are written as exact strings
// ("3/2", "-inf"); JSON numbers are accepted on input.

#include "amerdual/mot.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <string>

namespace amerdual::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "amerdual/1";

inline ExtReal<Rational> parse_ext(const json& j, const std::string& where) {
    try {
        if (j.is_string()) {
            const auto& s = j.get_ref<const std::string&>();
            if (s == "-inf") return std::nullopt;
            return Rational::parse(s);
        }
        if (j.is_number_integer()) return Rational(j.get<long>());
        if (j.is_number()) return Rational::parse(j.dump());
    } catch (const std::exception& e) {
        throw MalformedInput(where + ": " + e.what());
    }
    throw MalformedInput(where + ": expected a number or a string such as \"3/2\"");
}

inline Rational parse_scalar(const json& j, const std::string& where) {
    auto v = parse_ext(j, where);
    if (!v) throw MalformedInput(where + ": -inf is not allowed here");
    return *v;
}

template <Field F>
json scalar_json(const F& v) {
    if constexpr (field_traits<F>::exact) return field_traits<F>::render(v);
    else return v;
}

template <Field F>
json ext_json(const ExtReal<F>& v) {
    return v ? scalar_json(*v) : json("-inf");
}

/// A point of R^d: a scalar when d = 1, else an array.
inline std::vector<Rational> parse_point(const json& j, const std::string& where) {
    std::vector<Rational> x;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) x.push_back(parse_scalar(j[i], where + "[" + std::to_string(i) + "]"));
    } else {
        x.push_back(parse_scalar(j, where));
    }
    return x;
}

template <Field F>
json point_json(const std::vector<F>& x) {
    if (x.size() == 1) return scalar_json(x[0]);
    json a = json::array();
    for (const F& v : x) a.push_back(scalar_json(v));
    return a;
}

template <Field F>
std::string state_key(const std::vector<F>& x) {
    std::string s;
    for (const F& v : x) s += (s.empty() ? "" : ",") + field_traits<F>::render(v);
    return s;
}

inline const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw MalformedInput(where + ": missing field \"" + key + "\"");
    return j.at(key);
}

inline int parse_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw MalformedInput(where + ": expected an integer");
    return j.get<int>();
}

/// Parsed model document; payload fields are resolved once the market exists.
struct ModelDoc {
    std::string kind;  // "market" or "mot"
    std::string name;
    MarketData<Rational> market;
    std::optional<MarginalSpec<Rational>> marginals;
    std::optional<PathGrid<Rational>> grid;
    std::optional<json> american;
    std::optional<json> european;
    json source;
};

inline MarketData<Rational> parse_market(const json& j) {
    MarketData<Rational> d;
    d.name = j.value("name", std::string("model"));
    d.horizon = parse_int(field(j, "horizon", "model"), "horizon");
    const auto& nodes = field(j, "nodes", "model");
    if (!nodes.is_array()) throw MalformedInput("nodes: expected an array");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string w = "nodes[" + std::to_string(i) + "]";
        const auto& n = nodes[i];
        NodeSpec<Rational> s;
        s.id = parse_int(field(n, "id", w), w + ".id");
        s.time = parse_int(field(n, "time", w), w + ".time");
        if (n.contains("parent") && !n.at("parent").is_null()) s.parent = parse_int(n.at("parent"), w + ".parent");
        s.assets = parse_point(field(n, "assets", w), w + ".assets");
        d.nodes.push_back(std::move(s));
    }
    if (j.contains("statics")) {
        const auto& st = j.at("statics");
        for (std::size_t i = 0; i < st.size(); ++i) {
            const std::string w = "statics[" + std::to_string(i) + "]";
            StaticOption<Rational> g;
            g.price = parse_scalar(field(st[i], "price", w), w + ".price");
            const auto& pay = field(st[i], "payoff", w);
            if (!pay.is_object()) throw MalformedInput(w + ".payoff: expected an object keyed by terminal node id");
            for (const auto& [k, v] : pay.items()) {
                int id = 0;
                try {
                    id = std::stoi(k);
                } catch (const std::exception&) {
                    throw MalformedInput(w + ".payoff: key \"" + k + "\" is not a node id");
                }
                g.payoff[id] = parse_scalar(v, w + ".payoff." + k);
            }
            d.statics.push_back(std::move(g));
        }
    }
    auto violations = validate(d);
    if (!violations.empty()) throw InvalidMarket(std::move(violations));
    return d;
}

inline MarginalSpec<Rational> parse_marginals(const json& j) {
    MarginalSpec<Rational> spec;
    const auto& times = field(j, "times", "marginals");
    for (std::size_t i = 0; i < times.size(); ++i) spec.times.push_back(parse_int(times[i], "marginals.times"));
    const auto& mus = field(j, "marginals", "marginals");
    for (std::size_t i = 0; i < mus.size(); ++i) {
        std::vector<WeightedPoint<Rational>> mu;
        for (std::size_t k = 0; k < mus[i].size(); ++k) {
            const std::string w = "marginals.marginals[" + std::to_string(i) + "][" + std::to_string(k) + "]";
            mu.push_back({parse_point(field(mus[i][k], "x", w), w + ".x"), parse_scalar(field(mus[i][k], "p", w), w + ".p")});
        }
        spec.marginals.push_back(std::move(mu));
    }
    spec.s0 = parse_point(field(j, "s0", "marginals"), "marginals.s0");
    validate_spec(spec);
    return spec;
}

inline ModelDoc parse_model(const json& j) {
    if (!j.is_object()) throw MalformedInput("model: expected a JSON object");
    if (j.contains("schema") && j.at("schema") != kSchema)
        throw MalformedInput("model: unsupported schema " + j.at("schema").dump());
    ModelDoc doc;
    doc.source = j;
    doc.kind = j.value("kind", std::string("market"));
    doc.name = j.value("name", std::string("model"));
    if (doc.kind == "market") {
        doc.market = parse_market(j);
    } else if (doc.kind == "mot") {
        doc.marginals = parse_marginals(field(j, "marginals", "model"));
        if (j.contains("grid")) {
            PathGrid<Rational> g;
            const auto& levels = j.at("grid");
            for (std::size_t k = 0; k < levels.size(); ++k) {
                g.emplace_back();
                for (std::size_t i = 0; i < levels[k].size(); ++i)
                    g.back().push_back(parse_point(levels[k][i], "grid[" + std::to_string(k) + "][" + std::to_string(i) + "]"));
            }
            doc.grid = std::move(g);
        }
    } else {
        throw MalformedInput("model: unknown kind \"" + doc.kind + "\"");
    }
    if (j.contains("american")) doc.american = j.at("american");
    if (j.contains("european")) doc.european = j.at("european");
    return doc;
}

inline ModelDoc load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedInput("cannot open model file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw MalformedInput(path + ": " + e.what());
    }
    return parse_model(j);
}

template <Field F>
MarketData<F> convert(const MarketData<Rational>& d) {
    MarketData<F> out;
    out.name = d.name;
    out.horizon = d.horizon;
    for (const auto& n : d.nodes) {
        NodeSpec<F> s{n.id, n.time, n.parent, {}};
        for (const auto& v : n.assets) s.assets.push_back(field_traits<F>::from_rational(v));
        out.nodes.push_back(std::move(s));
    }
    for (const auto& g : d.statics) {
        StaticOption<F> h;
        for (const auto& [id, v] : g.payoff) h.payoff[id] = field_traits<F>::from_rational(v);
        h.price = field_traits<F>::from_rational(g.price);
        out.statics.push_back(std::move(h));
    }
    return out;
}

template <Field F>
std::vector<F> convert(const std::vector<Rational>& x) {
    std::vector<F> out;
    for (const auto& v : x) out.push_back(field_traits<F>::from_rational(v));
    return out;
}

template <Field F>
MarginalSpec<F> convert(const MarginalSpec<Rational>& s) {
    MarginalSpec<F> out{s.times, {}, convert<F>(s.s0)};
    for (const auto& mu : s.marginals) {
        out.marginals.emplace_back();
        for (const auto& wp : mu) out.marginals.back().push_back({convert<F>(wp.x), field_traits<F>::from_rational(wp.p)});
    }
    return out;
}

template <Field F>
MotMarket<F> build_mot(const ModelDoc& doc) {
    auto spec = convert<F>(*doc.marginals);
    PathGrid<F> grid;
    if (doc.grid) {
        for (const auto& level : *doc.grid) {
            grid.emplace_back();
            for (const auto& x : level) grid.back().push_back(convert<F>(x));
        }
    } else {
        grid = default_grid(spec);
    }
    return build_mot_market(spec, std::move(grid), doc.name);
}

/// American payoff from a list of per-date objects. Keys are terminal node
/// ids, or for "mot" models the state at the exercise date; absent keys are -inf.
template <Field F>
AmericanPayoff<F> parse_american(const json& j, const FiniteFilteredMarket<F>& m, bool by_state) {
    if (!j.is_array() || j.size() != static_cast<std::size_t>(m.horizon()))
        throw MalformedInput("american: expected one object per exercise date 1.." + std::to_string(m.horizon()));
    AmericanPayoff<F> phi{std::vector<std::vector<ExtReal<F>>>(static_cast<std::size_t>(m.horizon()),
                                                               std::vector<ExtReal<F>>(m.num_paths()))};
    for (int k = 1; k <= m.horizon(); ++k) {
        const auto& row = j[static_cast<std::size_t>(k - 1)];
        const std::string w = "american[" + std::to_string(k - 1) + "]";
        if (!row.is_object()) throw MalformedInput(w + ": expected an object");
        std::map<std::string, ExtReal<F>> values;
        for (const auto& [key, v] : row.items()) {
            auto r = parse_ext(v, w + "." + key);
            values[key] = r ? ExtReal<F>(field_traits<F>::from_rational(*r)) : std::nullopt;
        }
        std::size_t used = 0;
        std::map<std::string, bool> seen;
        for (std::size_t p = 0; p < m.num_paths(); ++p) {
            const std::string key = by_state ? state_key(m.assets(m.ancestor(p, k))) : std::to_string(m.path_id(p));
            auto it = values.find(key);
            if (it == values.end()) continue;
            phi.values[static_cast<std::size_t>(k - 1)][p] = it->second;
            if (!seen[key]) {
                seen[key] = true;
                ++used;
            }
        }
        if (used != values.size()) {
            for (const auto& [key, v] : values)
                if (!seen.count(key))
                    throw MalformedInput(w + ": key \"" + key + "\" matches no " + (by_state ? "state at that date" : "terminal node"));
        }
    }
    check_payoff(m, phi);
    return phi;
}

/// European claim keyed by terminal node id; absent keys pay 0.
template <Field F>
std::vector<ExtReal<F>> parse_european(const json& j, const FiniteFilteredMarket<F>& m) {
    if (!j.is_object()) throw MalformedInput("european: expected an object keyed by terminal node id");
    std::vector<ExtReal<F>> xi(m.num_paths(), F(0));
    for (const auto& [key, v] : j.items()) {
        int id = 0;
        try {
            id = std::stoi(key);
        } catch (const std::exception&) {
            throw MalformedInput("european: key \"" + key + "\" is not a node id");
        }
        auto p = m.path_of_id(id);
        if (!p) throw MalformedInput("european: node " + key + " is not terminal");
        auto r = parse_ext(v, "european." + key);
        xi[*p] = r ? ExtReal<F>(field_traits<F>::from_rational(*r)) : std::nullopt;
    }
    return xi;
}

template <Field F>
json market_json(const MarketData<F>& d) {
    json j;
    j["schema"] = kSchema;
    j["kind"] = "market";
    j["name"] = d.name;
    j["horizon"] = d.horizon;
    json nodes = json::array();
    for (const auto& n : d.nodes) {
        json a = json::array();
        for (const auto& v : n.assets) a.push_back(scalar_json(v));
        nodes.push_back({{"id", n.id}, {"time", n.time}, {"parent", n.parent ? json(*n.parent) : json(nullptr)}, {"assets", a}});
    }
    j["nodes"] = nodes;
    json st = json::array();
    for (const auto& g : d.statics) {
        json pay = json::object();
        for (const auto& [id, v] : g.payoff) pay[std::to_string(id)] = scalar_json(v);
        st.push_back({{"payoff", pay}, {"price", scalar_json(g.price)}});
    }
    j["statics"] = st;
    return j;
}

template <Field F>
json american_json(const FiniteFilteredMarket<F>& m, const AmericanPayoff<F>& phi) {
    json rows = json::array();
    for (int k = 1; k <= m.horizon(); ++k) {
        json row = json::object();
        for (std::size_t p = 0; p < m.num_paths(); ++p) {
            const auto& v = phi.at(k, p);
            if (v) row[std::to_string(m.path_id(p))] = scalar_json(*v);
        }
        rows.push_back(row);
    }
    return rows;
}

template <Field F>
json marginals_json(const MarginalSpec<F>& s) {
    json mus = json::array();
    for (const auto& mu : s.marginals) {
        json a = json::array();
        for (const auto& wp : mu) a.push_back({{"x", point_json(wp.x)}, {"p", scalar_json(wp.p)}});
        mus.push_back(a);
    }
    return {{"times", s.times}, {"marginals", mus}, {"s0", point_json(s.s0)}};
}

/// MOT model with an American payoff keyed by state; fails if Φ_k is not a
/// function of S_k.
template <Field F>
json mot_json(const MotMarket<F>& mm, const AmericanPayoff<F>& phi) {
    const auto& m = mm.market;
    json j;
    j["schema"] = kSchema;
    j["kind"] = "mot";
    j["name"] = m.name();
    j["marginals"] = marginals_json(mm.spec);
    json grid = json::array();
    for (const auto& level : mm.grid) {
        json a = json::array();
        for (const auto& x : level) a.push_back(point_json(x));
        grid.push_back(a);
    }
    j["grid"] = grid;
    json rows = json::array();
    for (int k = 1; k <= m.horizon(); ++k) {
        json row = json::object();
        for (std::size_t p = 0; p < m.num_paths(); ++p) {
            const std::string key = state_key(m.assets(m.ancestor(p, k)));
            json v = ext_json(phi.at(k, p));
            if (row.contains(key) && row[key] != v)
                throw MalformedInput("payoff at date " + std::to_string(k) + " is not a function of the state");
            row[key] = v;
        }
        rows.push_back(row);
    }
    j["american"] = rows;
    return j;
}

inline void save_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw MalformedInput("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace amerdual::io
