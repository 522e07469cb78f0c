#include "amerdual/arbitrage.hpp"
#include "amerdual/dpp.hpp"
#include "amerdual/fixtures_basic.hpp"
#include "amerdual/fixtures_mot.hpp"
#include "amerdual/json_io.hpp"
#include "amerdual/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <random>

namespace {

using namespace amerdual;
using json = io::json;

enum Exit { kOk = 0, kInput = 1, kArbitrage = 2, kScale = 3, kInternal = 4 };

struct Options {
    std::string command;
    std::string model_path;
    std::string mode = "rational";
    std::uint64_t cap = 1000000;
    bool as_json = false;
    std::uint64_t seed = 0;
    std::string formulation = "gap";
    bool no_statics = false;
    int retries = 8;
    std::string fixture;
    std::string out;
    std::string report_path;
};

/// The options that determine a report's values.
json options_json(const Options& o) {
    return {{"command", o.command},         {"mode", o.mode},         {"cap", o.cap},
            {"seed", o.seed},               {"formulation", o.formulation}, {"no_statics", o.no_statics},
            {"retries", o.retries},         {"fixture", o.fixture}};
}

Options options_from_json(const json& j) {
    Options o;
    o.command = j.at("command").get<std::string>();
    o.mode = j.at("mode").get<std::string>();
    o.cap = j.at("cap").get<std::uint64_t>();
    o.seed = j.at("seed").get<std::uint64_t>();
    o.formulation = j.at("formulation").get<std::string>();
    o.no_statics = j.at("no_statics").get<bool>();
    o.retries = j.at("retries").get<int>();
    o.fixture = j.at("fixture").get<std::string>();
    return o;
}

template <Field F>
json path_measure_json(const FiniteFilteredMarket<F>& m, const PathMeasure<F>& q) {
    json j = json::object();
    for (std::size_t p = 0; p < m.num_paths(); ++p)
        if (!field_traits<F>::is_zero(q.weights[p])) j[std::to_string(m.path_id(p))] = io::scalar_json(q.weights[p]);
    return j;
}

template <Field F>
json enlarged_measure_json(const EnlargedMarket<F>& mb, const EnlargedMeasure<F>& q) {
    json j = json::array();
    for (std::size_t pt = 0; pt < mb.num_points(); ++pt) {
        if (field_traits<F>::is_zero(q.weights[pt])) continue;
        auto [p, th] = mb.point(pt);
        j.push_back({{"leaf", mb.base().path_id(p)}, {"theta", th}, {"weight", io::scalar_json(q.weights[pt])}});
    }
    return j;
}

template <Field F>
json tau_json(const FiniteFilteredMarket<F>& m, const StoppingRule& r) {
    json j = json::object();
    for (std::size_t p = 0; p < m.num_paths(); ++p) j[std::to_string(m.path_id(p))] = r.tau[p];
    return j;
}

template <Field F>
json vector_json(const std::vector<F>& v) {
    json j = json::array();
    for (const F& x : v) j.push_back(io::scalar_json(x));
    return j;
}

template <Field F>
FiniteFilteredMarket<F> without_statics(const FiniteFilteredMarket<F>& m) {
    auto d = m.data();
    d.statics.clear();
    return FiniteFilteredMarket<F>(std::move(d));
}

template <Field F>
class Runner {
public:
    Runner(const Options& o, report::Report& r) : o_(o), r_(r) {}

    void run_model(const json& model) {
        doc_ = io::parse_model(model);
        r_.inputs["model"] = model;
        if (o_.command.rfind("mot ", 0) == 0) {
            if (doc_.kind != "mot") throw MalformedInput("mot commands need a model of kind \"mot\"");
            mot_ = io::build_mot<F>(doc_);
            market_ = mot_->market;
        } else if (doc_.kind == "mot") {
            mot_ = io::build_mot<F>(doc_);
            market_ = mot_->market;
        } else {
            market_ = FiniteFilteredMarket<F>(io::convert<F>(doc_.market));
        }
        const auto& m = *market_;
        if (o_.command == "price-eu") return price_eu(m);
        if (o_.command == "price-am") return price_am(m, payoff(m));
        if (o_.command == "dual") return dual(m, payoff(m));
        if (o_.command == "dpp") return dpp(m, payoff(m));
        if (o_.command == "extend") return extend(m, payoff(m));
        if (o_.command == "check-na") return check_na_cmd(m);
        if (o_.command == "mot values") return mot_values_cmd(payoff(m));
        if (o_.command == "mot approx") return mot_approx(payoff(m));
        if (o_.command == "mot mvm") return mot_mvm();
        throw MalformedInput("unknown command " + o_.command);
    }

    void run_fixture(const std::string& name) {
        if (name == "intro") {
            auto plain = fixtures::intro<F>(false);
            auto fx = fixtures::intro<F>();
            r_.add<F>("american_no_static", price_american(plain.market, plain.payoff, false).value);
            r_.add<F>("strong_no_static", strong_value(plain.market, plain.payoff, o_.cap).value);
            gap(fx.market, fx.payoff);
            extension(fx.market, fx.payoff);
        } else if (name == "hobson-neuberger") {
            auto fx = fixtures::hobson_neuberger<F>();
            gap(fx.market, fx.payoff);
            extension(fx.market, fx.payoff);
        } else if (name == "mot-example") {
            auto fx = fixtures::mot_example<F>();
            mot_ = fx.mot;
            mot_values_cmd(fx.payoff);
            auto mb = enlarge(fx.mot.market);
            r_.add<F>("q0_objective", expectation(fx.q0, payoff_on_points(mb, fx.payoff)));
            r_.check("q0_calibrated", !detail::enlarged_membership(mb, fx.q0).has_value());
            r_.check("q0_pseudo_stopping", is_pseudo_stopping(mb, fx.q0).member);
        } else {
            throw MalformedInput("unknown fixture \"" + name + "\"; see `fixtures list`");
        }
    }

private:
    AmericanPayoff<F> payoff(const FiniteFilteredMarket<F>& m) {
        if (!doc_.american) throw MalformedInput("model has no \"american\" payoff");
        return io::parse_american(*doc_.american, m, doc_.kind == "mot");
    }

    [[nodiscard]] bool statics() const { return !o_.no_statics; }

    void price_eu(const FiniteFilteredMarket<F>& m) {
        if (!doc_.european) throw MalformedInput("model has no \"european\" claim");
        auto res = price_european(m, io::parse_european(*doc_.european, m), statics());
        r_.add<F>("european", res.value);
        r_.artifacts["static_holdings"] = vector_json(res.h);
    }

    void price_am(const FiniteFilteredMarket<F>& m, const AmericanPayoff<F>& phi) {
        auto res = price_american(m, phi, statics());
        r_.add<F>("american", res.value);
        r_.artifacts["static_holdings"] = vector_json(res.strategy.h);
    }

    void dual(const FiniteFilteredMarket<F>& m, const AmericanPayoff<F>& phi) {
        if (o_.formulation == "strong") {
            auto s = strong_value(m, phi, o_.cap);
            r_.add<F>("strong", s.value);
            r_.artifacts["tau"] = tau_json(m, s.tau);
            if (s.measure) r_.artifacts["measure"] = path_measure_json(m, *s.measure);
        } else if (o_.formulation == "weak") {
            auto mb = enlarge(m);
            auto w = weak_value(mb, phi);
            r_.add<F>("weak", w.value);
            if (w.measure) r_.artifacts["measure"] = enlarged_measure_json(mb, *w.measure);
        } else {
            gap(m, phi);
        }
    }

    void gap(const FiniteFilteredMarket<F>& m, const AmericanPayoff<F>& phi) {
        auto g = duality_gap(m, phi, o_.cap);
        r_.add<F>("primal", g.primal);
        r_.add<F>("weak", g.weak_dual);
        r_.add<F>("strong", g.strong_dual);
        r_.add<F>("gap_weak_strong", g.gap_weak_strong);
        r_.check("duality_holds", g.duality_holds);
    }

    void dpp(const FiniteFilteredMarket<F>& m, const AmericanPayoff<F>& phi) {
        if (m.num_statics() > 0) r_.warnings.push_back("static options are ignored by the dynamic programming operators");
        auto mb = enlarge(m);
        auto env = snell_enlarged(mb, phi);
        auto tau = optimal_tau_star(mb, phi, env);
        r_.add<F>("snell_level0", env.value());
        r_.add<F>("value_at_tau_star", sup_calibrated(without_statics(m), stopped_payoff(phi, tau)).value);
        json levels = json::array();
        for (int k = 0; k < m.horizon(); ++k) {
            json level = json::array();
            for (std::size_t a = 0; a < mb.atoms(k).size(); ++a) {
                const auto& at = mb.atoms(k)[a];
                level.push_back({{"node", m.node_id(at.node)}, {"theta", {at.theta_lo, at.theta_hi}},
                                 {"value", io::ext_json(env.levels[static_cast<std::size_t>(k)][a])}});
            }
            levels.push_back(level);
        }
        r_.artifacts["levels"] = levels;
        r_.artifacts["tau_star"] = tau_json(m, tau);
    }

    void extension(const FiniteFilteredMarket<F>& m, const AmericanPayoff<F>& phi) {
        auto out = extend_and_verify(m, phi, o_.retries, o_.seed, o_.cap);
        const auto& x = out.extension.market;
        r_.add<F>("extension_strong", out.check.strong_value_hat);
        r_.check("extension_realizes", out.check.realizes);
        json summary{{"paths", x.num_paths()}, {"nodes", x.num_nodes()}, {"assets", x.dim()}, {"attempts", out.attempts}};
        json y1 = json::array();
        if (m.num_statics() > 0 && x.horizon() > 1) {
            for (std::size_t node : x.atoms(1)) {
                json quotes = json::array();
                for (std::size_t s = 0; s < m.num_statics(); ++s)
                    quotes.push_back(io::scalar_json(x.assets(node)[m.dim() + s] + out.extension.y_offsets[s]));
                y1.push_back(quotes);
            }
            summary["static_quotes_at_1"] = y1;
        }
        r_.artifacts["extension"] = summary;
        if (out.check.tau_hat) r_.artifacts["tau_hat"] = tau_json(x, *out.check.tau_hat);
        if (!o_.out.empty()) io::save_json(io::market_json(x.data()), o_.out);
    }

    void extend(const FiniteFilteredMarket<F>& m, const AmericanPayoff<F>& phi) {
        r_.add<F>("primal", price_american(m, phi, true).value);
        extension(m, phi);
    }

    void check_na_cmd(const FiniteFilteredMarket<F>& m) {
        auto arb = check_na(m);
        auto arb_bar = check_na_enlarged(enlarge(m));
        r_.check("no_arbitrage", !arb.has_value());
        r_.check("enlarged_agrees", arb.has_value() == arb_bar.has_value());
        if (arb) {
            json H = json::array();
            for (const auto& level : arb->H.H) {
                json l = json::array();
                for (const auto& atom : level) l.push_back(vector_json(atom));
                H.push_back(l);
            }
            r_.artifacts["witness"] = {{"H", H}, {"static_holdings", vector_json(arb->h)}};
        }
    }

    void mot_values_cmd(const AmericanPayoff<F>& phi) {
        auto g = mot_values(*mot_, phi, o_.cap);
        r_.add<F>("primal", g.primal);
        r_.add<F>("weak", g.weak_dual);
        r_.add<F>("strong", g.strong_dual);
        r_.add<F>("gap_weak_strong", g.gap_weak_strong);
    }

    void mot_approx(const AmericanPayoff<F>& phi) {
        auto ladder = default_ladder(*mot_);
        auto seq = mot_approx_sequence(*mot_, phi, ladder);
        r_.add<F>("P[0]", seq[0]);
        bool monotone = true;
        for (std::size_t j = 1; j < seq.size(); ++j) {
            r_.add<F>("P[" + std::to_string(j) + "] +" + ladder[j - 1].label(mot_->spec), seq[j]);
            monotone = monotone && !ext_less<F>(seq[j - 1], seq[j]);
        }
        r_.check("nonincreasing", monotone);
    }

    void mot_mvm() {
        const auto& m = mot_->market;
        std::mt19937_64 rng(o_.seed);
        std::uniform_int_distribution<int> coef(-4, 4);
        std::vector<ExtReal<F>> xi;
        for (std::size_t p = 0; p < m.num_paths(); ++p) xi.push_back(F(coef(rng)));
        auto sup = sup_calibrated(m, xi);
        if (!sup.measure) throw NoCalibratedMeasure("no calibrated measure to build a measure-valued martingale from");
        const auto& q = *sup.measure;
        auto eta = mvm_from_measure(*mot_, q);
        auto c = check_mvm(*mot_, eta, q);
        r_.check("is_mvm", c.is_mvm);
        r_.check("terminating", c.terminating);
        r_.check("consistent", c.consistent);
        if (mot_->spec.dim() == 1) {
            auto lo = check_conditional_law_and_order(*mot_, eta, q);
            r_.check("law_ok", lo.law_ok);
            r_.check("order_ok", lo.order_ok);
        }
        r_.artifacts["measure"] = path_measure_json(m, q);
        json out = json::array();
        for (const auto& per_i : eta.eta) {
            json times = json::array();
            for (int k = 0; k <= m.horizon(); ++k) {
                json atoms = json::object();
                const auto& level = per_i[static_cast<std::size_t>(k)];
                for (std::size_t a = 0; a < level.size(); ++a) atoms[std::to_string(m.node_id(m.atoms(k)[a]))] = vector_json(level[a]);
                times.push_back(atoms);
            }
            out.push_back(times);
        }
        r_.artifacts["eta"] = out;
    }

    const Options& o_;
    report::Report& r_;
    io::ModelDoc doc_;
    std::optional<FiniteFilteredMarket<F>> market_;
    std::optional<MotMarket<F>> mot_;
};

const std::vector<std::pair<std::string, std::string>>& fixture_list() {
    static const std::vector<std::pair<std::string, std::string>> list{
        {"intro", fixtures::intro<Rational>().description},
        {"hobson-neuberger", fixtures::hobson_neuberger<Rational>().description},
        {"mot-example", fixtures::mot_example<Rational>().description},
    };
    return list;
}

json fixture_model(const std::string& name) {
    if (name == "intro" || name == "intro-no-static") {
        auto fx = fixtures::intro<Rational>(name == "intro");
        json j = io::market_json(fx.market.data());
        j["american"] = io::american_json(fx.market, fx.payoff);
        return j;
    }
    if (name == "hobson-neuberger") {
        auto fx = fixtures::hobson_neuberger<Rational>();
        json j = io::market_json(fx.market.data());
        j["american"] = io::american_json(fx.market, fx.payoff);
        return j;
    }
    if (name == "mot-example") {
        auto fx = fixtures::mot_example<Rational>();
        return io::mot_json(fx.mot, fx.payoff);
    }
    throw MalformedInput("unknown fixture \"" + name + "\"; see `fixtures list`");
}

template <Field F>
report::Report execute_as(const Options& o, const std::optional<json>& model) {
    report::Report r;
    r.command = o.command;
    r.inputs["options"] = options_json(o);
    Runner<F> runner(o, r);
    if (o.command == "fixtures run") runner.run_fixture(o.fixture);
    else runner.run_model(*model);
    return r;
}

report::Report execute(const Options& o, const std::optional<json>& model) {
    return o.mode == "float" ? execute_as<double>(o, model) : execute_as<Rational>(o, model);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedInput("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw MalformedInput(path + ": " + e.what());
    }
}

void emit(const report::Report& r, bool as_json) {
    if (as_json) std::cout << r.to_json().dump(2) << "\n";
    else std::cout << r.to_text();
}

int dispatch(Options& o) {
    if (o.command == "fixtures list") {
        report::Report r;
        r.command = o.command;
        json list = json::array();
        for (const auto& [name, desc] : fixture_list()) list.push_back({{"name", name}, {"description", desc}});
        r.artifacts["fixtures"] = list;
        emit(r, o.as_json);
        return kOk;
    }
    if (o.command == "fixtures export") {
        json j = fixture_model(o.fixture);
        if (o.out.empty()) std::cout << j.dump(2) << "\n";
        else io::save_json(j, o.out);
        return kOk;
    }
    if (o.command == "replay") {
        json old = read_json_file(o.report_path);
        if (!old.contains("inputs") || !old.at("inputs").contains("options"))
            throw MalformedInput(o.report_path + ": not a report with embedded inputs");
        Options again = options_from_json(old.at("inputs").at("options"));
        std::optional<json> model;
        if (old.at("inputs").contains("model")) model = old.at("inputs").at("model");
        auto r = execute(again, model);
        const bool same = r.digest() == old.value("inputs_digest", std::string()) && report::same_values(r.to_json(), old);
        r.check("replay_matches", same);
        emit(r, o.as_json);
        return same ? kOk : kInternal;
    }
    std::optional<json> model;
    if (o.command != "fixtures run") {
        if (o.model_path.empty()) throw MalformedInput(o.command + " needs --model FILE");
        model = read_json_file(o.model_path);
    }
    emit(execute(o, model), o.as_json);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust American option pricing on finite event-tree markets"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--mode", o.mode, "Scalar field")->check(CLI::IsMember({"rational", "float"}));
    app.add_option("--cap", o.cap, "Stopping-rule enumeration cap");
    app.add_flag("--json", o.as_json, "Machine-readable report");
    app.add_option("--seed", o.seed, "Seed for randomized choices");

    auto model_cmd = [&](const std::string& name, const std::string& help) {
        auto* c = app.add_subcommand(name, help);
        c->add_option("--model", o.model_path, "Model file")->required();
        c->callback([&o, name] { o.command = name; });
        return c;
    };
    model_cmd("price-eu", "Superhedging price of the model's European claim")
        ->add_flag("--no-statics", o.no_statics, "Ignore static options");
    model_cmd("price-am", "Superhedging price of the model's American payoff")
        ->add_flag("--no-statics", o.no_statics, "Ignore static options");
    model_cmd("dual", "Strong or weak dual value, or both with the primal")
        ->add_option("--formulation", o.formulation)
        ->check(CLI::IsMember({"strong", "weak", "gap"}));
    model_cmd("dpp", "Snell envelope on the enlarged space and the optimal exercise rule");
    auto* ext = model_cmd("extend", "Build and verify a dynamic extension");
    ext->add_option("--retries", o.retries, "Alternative optimal measures to try");
    ext->add_option("--out", o.out, "Write the extension market to FILE");
    model_cmd("check-na", "No-arbitrage check with a witness strategy");

    auto* mot = app.add_subcommand("mot", "Marginal-constrained models");
    mot->require_subcommand(1);
    for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
             {"values", "Primal, weak and strong values"},
             {"approx", "Weak values along the default option ladder"},
             {"mvm", "Measure-valued martingale of a calibrated measure (chosen by --seed)"}}) {
        auto* c = mot->add_subcommand(name, help);
        c->add_option("--model", o.model_path, "Model file")->required();
        c->callback([&o, name = name] { o.command = "mot " + name; });
    }

    auto* fx = app.add_subcommand("fixtures", "Built-in examples");
    fx->require_subcommand(1);
    fx->add_subcommand("list", "List fixtures")->callback([&o] { o.command = "fixtures list"; });
    auto* run = fx->add_subcommand("run", "Run a fixture");
    run->add_option("name", o.fixture)->required();
    run->callback([&o] { o.command = "fixtures run"; });
    auto* exp = fx->add_subcommand("export", "Print a fixture as a model file");
    exp->add_option("name", o.fixture)->required();
    exp->add_option("--out", o.out, "Write to FILE instead of stdout");
    exp->callback([&o] { o.command = "fixtures export"; });

    auto* replay = app.add_subcommand("replay", "Re-run a --json report from its embedded inputs");
    replay->add_option("report", o.report_path)->required();
    replay->callback([&o] { o.command = "replay"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInput;
    }
    try {
        return dispatch(o);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInput;
    } catch (const ArbitrageError& e) {
        std::cerr << "arbitrage: " << e.what() << "\n";
        return kArbitrage;
    } catch (const ScaleError& e) {
        std::cerr << "scale limit: " << e.what() << "\n";
        return kScale;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}
