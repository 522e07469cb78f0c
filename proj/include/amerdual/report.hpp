#pragma once

#include "amerdual/json_io.hpp"

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace amerdual::report {

using json = io::json;

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

template <Field F>
std::string decimal(const ExtReal<F>& v) {
    if (!v) return "-inf";
    std::ostringstream os;
    os << std::setprecision(12) << field_traits<F>::to_double(*v);
    return os.str();
}

struct Value {
    std::string label;
    std::string exact;
    std::string decimal;
};

struct Report {
    std::string command;
    json inputs = json::object();  // options and model that reproduce the run
    std::vector<Value> values;
    json checks = json::object();
    json artifacts = json::object();
    std::vector<std::string> warnings;

    template <Field F>
    void add(const std::string& label, const ExtReal<F>& v) {
        values.push_back({label, render_ext(v), decimal(v)});
    }

    void check(const std::string& label, bool ok) { checks[label] = ok; }

    [[nodiscard]] std::string digest() const { return hex64(fnv1a(inputs.dump())); }

    [[nodiscard]] json to_json() const {
        json j;
        j["schema"] = io::kSchema;
        j["command"] = command;
        j["inputs_digest"] = digest();
        json vals = json::array();
        for (const auto& v : values) vals.push_back({{"label", v.label}, {"exact", v.exact}, {"decimal", v.decimal}});
        j["values"] = vals;
        j["checks"] = checks;
        j["artifacts"] = artifacts;
        j["warnings"] = warnings;
        j["inputs"] = inputs;
        return j;
    }

    [[nodiscard]] std::string to_text() const {
        std::ostringstream os;
        os << command << "  [inputs " << digest() << "]\n";
        std::size_t width = 0;
        for (const auto& v : values) width = std::max(width, v.label.size());
        for (const auto& [k, v] : checks.items()) width = std::max(width, k.size());
        for (const auto& v : values) {
            os << "  " << std::left << std::setw(static_cast<int>(width)) << v.label << "  " << v.exact;
            if (v.exact != v.decimal) os << "  (" << v.decimal << ")";
            os << "\n";
        }
        for (const auto& [k, v] : checks.items())
            os << "  " << std::left << std::setw(static_cast<int>(width)) << k << "  " << (v.get<bool>() ? "yes" : "no") << "\n";
        for (const auto& [k, v] : artifacts.items()) os << "  " << k << ": " << v.dump() << "\n";
        for (const auto& w : warnings) os << "  warning: " << w << "\n";
        return os.str();
    }
};

/// Values of two reports agree label by label.
inline bool same_values(const json& a, const json& b) {
    return a.at("values") == b.at("values") && a.at("checks") == b.at("checks");
}

}  // namespace amerdual::report
