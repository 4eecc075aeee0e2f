#include "heavytail/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "heavytail/error.hpp"
#include "heavytail/harness.hpp"
#include "heavytail/ld_estimator.hpp"
#include "heavytail/oracle.hpp"
#include "heavytail/twisted.hpp"

namespace heavytail {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigParseError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) throw ConfigParseError("unknown key '" + it.key() + "' in " + where);
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigParseError(std::string("bad value for '") + key + "': " + e.what());
    }
}

template <class T>
std::vector<T> grid(const json& j, const char* key) {
    if (!j.contains(key)) return {};
    const json& v = j.at(key);
    try {
        if (v.is_array()) return v.get<std::vector<T>>();
        return {v.get<T>()};
    } catch (const json::exception& e) {
        throw ConfigParseError(std::string("bad grid '") + key + "': " + e.what());
    }
}

std::string fmt_num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

constexpr std::uint64_t kPilotSalt = 0x9E3779B97F4A7C15ull;

} // namespace

std::string kind_name(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::LargeDeviation: return "large_deviation";
    case ExperimentKind::LevelCrossing: return "level_crossing";
    case ExperimentKind::Table1: return "table1";
    case ExperimentKind::Table2: return "table2";
    case ExperimentKind::Table3: return "table3";
    case ExperimentKind::PropertySuite: return "property_suite";
    }
    return "unknown";
}

IncrementModel build_model(const json& d) {
    if (!d.is_object() || !d.contains("kind")) throw ConfigParseError("model needs a 'kind'");
    const std::string kind = get_or<std::string>(d, "kind", "");
    if (kind == "pareto") {
        require_keys(d, {"kind", "alpha", "location", "centered"}, "pareto model");
        return IncrementModel::pareto(get_or(d, "alpha", 2.5), get_or(d, "location", 0.0), get_or(d, "centered", true));
    }
    if (kind == "product") {
        require_keys(d, {"kind", "alpha_lambda"}, "product model");
        return IncrementModel::product_lambda_laplace(get_or(d, "alpha_lambda", 4.0));
    }
    if (kind == "queue") {
        require_keys(d, {"kind", "service_alpha", "rho"}, "queue model");
        return IncrementModel::queue(get_or(d, "service_alpha", 2.5), get_or(d, "rho", 0.5));
    }
    if (kind == "discrete") {
        require_keys(d, {"kind", "atoms", "nominal_alpha"}, "discrete model");
        std::vector<Atom> atoms;
        try {
            for (const auto& a : d.at("atoms")) atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
        } catch (const json::exception& e) {
            throw ConfigParseError(std::string("atoms must be [[value, probability], ...]: ") + e.what());
        }
        return IncrementModel::discrete(std::move(atoms), get_or(d, "nominal_alpha", 2.5));
    }
    throw ConfigParseError("unknown model kind '" + kind + "' (pareto | product | queue | discrete)");
}

ExperimentConfig parse_config(const json& j) {
    require_keys(j,
                 {"experiment", "model", "n", "b", "b_equals_n", "r", "mu", "regime", "N", "epsilon", "delta", "pilot",
                  "epsilon_regime", "seed", "threads", "out"},
                 "config");
    if (!j.contains("experiment")) throw ConfigParseError("config needs an 'experiment'");
    const std::string kind = get_or<std::string>(j, "experiment", "");
    ExperimentConfig c;
    if (kind == "table1" || kind == "table2" || kind == "table3" || kind == "property_suite") {
        c = preset(kind);
    } else if (kind == "large_deviation") {
        c.kind = ExperimentKind::LargeDeviation;
    } else if (kind == "level_crossing") {
        c.kind = ExperimentKind::LevelCrossing;
    } else {
        throw ConfigParseError("unknown experiment '" + kind + "'");
    }
    if (j.contains("model")) c.model = j.at("model");
    if (j.contains("n")) c.n_grid = grid<std::int64_t>(j, "n");
    if (j.contains("b")) c.b_grid = grid<double>(j, "b");
    c.b_equals_n = get_or(j, "b_equals_n", c.b_equals_n);
    if (j.contains("r")) c.r_grid = grid<std::uint64_t>(j, "r");
    if (j.contains("mu")) c.mu = get_or(j, "mu", 0.0);
    if (j.contains("regime")) {
        const json& r = j.at("regime");
        if (r.is_string()) {
            c.regime.regime = parse_regime(r.get<std::string>());
        } else {
            require_keys(r, {"name", "beta", "gamma", "allow_alpha_boundary"}, "regime");
            c.regime.regime = parse_regime(get_or<std::string>(r, "name", "finite_variance"));
            c.regime.beta = get_or(r, "beta", 0.0);
            c.regime.gamma = get_or(r, "gamma", 0.0);
            c.regime.allow_alpha_boundary = get_or(r, "allow_alpha_boundary", false);
        }
    }
    c.n_reps = get_or<std::uint64_t>(j, "N", c.n_reps);
    if (j.contains("epsilon")) c.epsilon = get_or(j, "epsilon", 0.0);
    if (j.contains("delta")) c.delta = get_or(j, "delta", 0.0);
    c.pilot = get_or<std::uint64_t>(j, "pilot", c.pilot);
    c.epsilon_regime = get_or(j, "epsilon_regime", c.epsilon_regime);
    if (j.contains("seed")) c.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (j.contains("threads")) c.threads = get_or(j, "threads", 0);
    if (j.contains("out")) c.out = get_or<std::string>(j, "out", "");

    if (c.kind != ExperimentKind::PropertySuite) {
        if (c.model.is_null()) throw ConfigParseError("config needs a 'model'");
        build_model(c.model);  // reject malformed descriptors early
        const bool ld = c.kind == ExperimentKind::LargeDeviation || c.kind == ExperimentKind::Table1;
        if (ld && c.n_grid.empty()) throw ConfigParseError("empty n grid");
        if (ld && !c.b_equals_n && c.b_grid.empty()) throw ConfigParseError("empty b grid (or set b_equals_n)");
        if (!ld && c.b_grid.empty()) throw ConfigParseError("empty b grid");
        if (!ld && c.r_grid.empty()) throw ConfigParseError("empty r grid");
        if (c.n_reps < 2 && !(c.epsilon && c.delta)) throw ConfigParseError("N must be >= 2");
        if (c.epsilon.has_value() != c.delta.has_value())
            throw ConfigParseError("sample-size planning needs both epsilon and delta");
    }
    return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigParseError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigParseError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    c.n_reps = 10000;
    if (name == "table1") {
        c.kind = ExperimentKind::Table1;
        c.model = {{"kind", "product"}, {"alpha_lambda", 4.0}};
        c.n_grid = {100, 500, 1000};
        c.b_equals_n = true;
    } else if (name == "table2") {
        c.kind = ExperimentKind::Table2;
        c.model = {{"kind", "queue"}, {"service_alpha", 2.5}, {"rho", 0.5}};
        c.b_grid = {1e2, 1e3, 1e4};
        c.r_grid = {2};
    } else if (name == "table3") {
        c.kind = ExperimentKind::Table3;
        c.model = {{"kind", "queue"}, {"service_alpha", 2.5}, {"rho", 0.5}};
        c.b_grid = {1e3};
        c.r_grid = {2, 10, 100};
    } else if (name == "property_suite") {
        c.kind = ExperimentKind::PropertySuite;
    } else {
        throw ConfigParseError("unknown preset '" + name + "' (table1 | table2 | table3 | property_suite)");
    }
    return c;
}

ExperimentOutput run_experiment(const ExperimentConfig& config, std::uint64_t seed, int threads,
                                std::ostream* progress) {
    ExperimentOutput out;
    if (config.kind == ExperimentKind::PropertySuite) {
        out.checks = property_suite(seed);
        return out;
    }
    const IncrementModel model = build_model(config.model);
    const std::string label = kind_name(config.kind);
    const bool ld = config.kind == ExperimentKind::LargeDeviation || config.kind == ExperimentKind::Table1;

    auto planned_reps = [&](const Replication& rep) {
        if (!(config.epsilon && config.delta)) return config.n_reps;
        const RunStats pilot = run(rep, std::max<std::uint64_t>(config.pilot, 2), threads, seed ^ kPilotSalt);
        if (!(pilot.mean > 0.0)) return config.n_reps;
        return std::max<std::uint64_t>(2, required_samples(pilot.cv, *config.epsilon, *config.delta));
    };

    if (ld) {
        // validate the whole grid before sampling
        std::vector<std::unique_ptr<LdEstimator>> estimators;
        for (std::int64_t n : config.n_grid) {
            const std::vector<double> bs = config.b_equals_n ? std::vector<double>{static_cast<double>(n)} : config.b_grid;
            for (double b : bs) {
                estimators.push_back(std::make_unique<LdEstimator>(LdProblem{model, n, b, config.epsilon_regime}));
                for (const auto& w : estimators.back()->warnings()) out.warnings.push_back(w);
            }
        }
        for (const auto& e : estimators) {
            const auto t0 = std::chrono::steady_clock::now();
            const Replication rep = [&e](std::uint64_t, RngStream& rng) { return e->sample(rng); };
            const std::uint64_t n_reps = planned_reps(rep);
            const RunStats s = estimate_large_deviation(*e, n_reps, threads, seed);
            ResultRow row;
            row.experiment = label;
            row.n = e->problem().n;
            row.b = e->problem().b;
            row.regime = "";
            row.n_reps = s.n_reps;
            row.estimate = s.mean;
            row.std_error = s.std_error;
            row.cv = s.cv;
            row.mean_work = s.mean_work;
            row.max_work = s.max_work;
            row.mean_max_index = s.mean_max_index;
            row.seed = seed;
            row.wall_seconds = seconds_since(t0);
            row.baseline = oracle::asymptotic_baselines(model, row.n.value(), row.b, 0.0).large_deviation;
            if (progress) *progress << label << " n=" << *row.n << " b=" << fmt_num(row.b) << " done\n";
            out.rows.push_back(row);
        }
        return out;
    }

    const double mu = config.mu ? *config.mu : model.queue_drift();
    if (!(mu > 0.0)) throw ConfigError("level crossing needs mu > 0 (set 'mu' for non-queue models)");
    std::vector<std::unique_ptr<CrossingEstimator>> estimators;
    for (double b : config.b_grid) {
        for (std::uint64_t r : config.r_grid) {
            CrossingProblem p{model, mu, b, BlockScheme(r)};
            estimators.push_back(std::make_unique<CrossingEstimator>(p, config.regime));
            for (const auto& w : estimators.back()->warnings()) out.warnings.push_back(w);
        }
    }
    std::sort(out.warnings.begin(), out.warnings.end());
    out.warnings.erase(std::unique(out.warnings.begin(), out.warnings.end()), out.warnings.end());
    for (const auto& e : estimators) {
        const auto t0 = std::chrono::steady_clock::now();
        const Replication rep = [&e](std::uint64_t, RngStream& rng) { return e->sample(rng); };
        const std::uint64_t n_reps = planned_reps(rep);
        const RunStats s = estimate_level_crossing(*e, n_reps, threads, seed);
        ResultRow row;
        row.experiment = label;
        row.b = e->problem().b;
        row.r = e->problem().scheme.r();
        row.regime = regime_name(e->pmf().regime());
        row.n_reps = s.n_reps;
        row.estimate = s.mean;
        row.std_error = s.std_error;
        row.cv = s.cv;
        row.mean_work = s.mean_work;
        row.max_work = s.max_work;
        row.mean_max_index = s.mean_max_index;
        row.seed = seed;
        row.wall_seconds = seconds_since(t0);
        row.baseline = oracle::asymptotic_baselines(model, 0, row.b, mu).level_crossing;
        if (progress) *progress << label << " b=" << fmt_num(row.b) << " r=" << *row.r << " done\n";
        out.rows.push_back(row);
    }
    return out;
}

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows, bool with_timing) {
    os << "experiment,n,b,r,regime,N,estimate,std_error,cv,mean_work,max_work,seed,wall_seconds\n";
    for (const ResultRow& r : rows) {
        os << r.experiment << ',' << (r.n ? std::to_string(*r.n) : "") << ',' << fmt_num(r.b) << ','
           << (r.r ? std::to_string(*r.r) : "") << ',' << r.regime << ',' << r.n_reps << ',' << fmt_num(r.estimate)
           << ',' << fmt_num(r.std_error) << ',' << fmt_num(r.cv) << ',' << fmt_num(r.mean_work) << ','
           << r.max_work << ',' << r.seed << ',';
        if (with_timing) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", r.wall_seconds);
            os << buf;
        }
        os << '\n';
    }
}

void write_summary(std::ostream& os, const ExperimentOutput& out) {
    if (!out.rows.empty()) {
        char line[256];
        std::snprintf(line, sizeof line, "%-16s %6s %10s %5s %10s %12s %11s %7s %12s %12s\n", "experiment", "n", "b",
                      "r", "N", "estimate", "std_error", "cv", "E[nu]/b", "baseline");
        os << line;
        for (const ResultRow& r : out.rows) {
            std::snprintf(line, sizeof line, "%-16s %6s %10.4g %5s %10llu %12.4e %11.3e %7.3f %12.3f %12.4e\n",
                          r.experiment.c_str(), r.n ? std::to_string(*r.n).c_str() : "-", r.b,
                          r.r ? std::to_string(*r.r).c_str() : "-", static_cast<unsigned long long>(r.n_reps),
                          r.estimate, r.std_error, r.cv, r.mean_max_index / r.b, r.baseline);
            os << line;
        }
    }
    for (const PropertyCheck& c : out.checks) {
        os << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.detail.empty()) os << "  (" << c.detail << ")";
        os << '\n';
    }
}

void write_svg(std::ostream& os, const std::vector<ResultRow>& rows, const std::string& title) {
    constexpr double W = 760, H = 340, pad = 50, panel = (W - 3 * pad) / 2;
    // grid variable: whichever of n, b, r varies across rows
    auto varies = [&](auto get) {
        return std::any_of(rows.begin(), rows.end(), [&](const ResultRow& r) { return get(r) != get(rows.front()); });
    };
    std::string xlabel = "b";
    if (!rows.empty() && rows.front().n && varies([](const ResultRow& r) { return double(r.n.value_or(0)); }))
        xlabel = "n";
    else if (!rows.empty() && rows.front().r && !varies([](const ResultRow& r) { return r.b; }))
        xlabel = "r";
    std::vector<double> xs, est, cvs;
    for (const ResultRow& r : rows) {
        xs.push_back(xlabel == "n" ? double(*r.n) : xlabel == "r" ? double(*r.r) : r.b);
        est.push_back(r.estimate);
        cvs.push_back(r.cv);
    }
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    auto draw = [&](int p, const std::vector<double>& ys, bool logy, const std::string& ylabel) {
        const double x0 = pad + p * (panel + pad), y0 = H - pad, y1 = 40;
        os << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << panel << "\" height=\"" << y0 - y1
           << "\" fill=\"none\" stroke=\"black\"/>\n";
        os << "<text x=\"" << x0 + panel / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << xlabel
           << " (log scale)</text>\n";
        os << "<text x=\"" << x0 + 4 << "\" y=\"" << y1 - 6 << "\">" << ylabel << "</text>\n";
        if (xs.empty()) return;
        auto tx = [](double v) { return std::log10(std::max(v, 1e-300)); };
        auto ty = [&](double v) { return logy ? std::log10(std::max(v, 1e-300)) : v; };
        double xmin = tx(*std::min_element(xs.begin(), xs.end())), xmax = tx(*std::max_element(xs.begin(), xs.end()));
        double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
        for (double y : ys)
            if (std::isfinite(y)) ymin = std::min(ymin, ty(y)), ymax = std::max(ymax, ty(y));
        if (!std::isfinite(ymin)) return;
        if (!logy) ymin = std::min(ymin, 0.0);
        if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
        if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
        auto px = [&](double v) { return x0 + 10 + (tx(v) - xmin) / (xmax - xmin) * (panel - 20); };
        auto py = [&](double v) { return y0 - 10 - (ty(v) - ymin) / (ymax - ymin) * (y0 - y1 - 20); };
        os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (std::isfinite(ys[i])) os << px(xs[i]) << ',' << py(ys[i]) << ' ';
        os << "\"/>\n";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(ys[i])) continue;
            os << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[i]) << "\" r=\"3\" fill=\"steelblue\"/>\n";
            char buf[48];
            std::snprintf(buf, sizeof buf, logy ? "%.3g" : "%.2f", ys[i]);
            os << "<text x=\"" << px(xs[i]) + 5 << "\" y=\"" << py(ys[i]) - 5 << "\">" << buf << "</text>\n";
        }
    };
    draw(0, est, true, "estimate (log scale)");
    draw(1, cvs, false, "coefficient of variation");
    os << "</svg>\n";
}

// ---------------------------------------------------------------------------
// property suite

std::vector<PropertyCheck> property_suite(std::uint64_t seed) {
    std::vector<PropertyCheck> checks;
    auto record = [&](const std::string& name, auto&& body) {
        PropertyCheck c{name, false, ""};
        try {
            std::ostringstream detail;
            c.passed = body(detail);
            c.detail = detail.str();
        } catch (const std::exception& e) {
            c.detail = std::string("exception: ") + e.what();
        }
        checks.push_back(c);
    };

    const IncrementModel product = IncrementModel::product_lambda_laplace(4.0);
    const IncrementModel queue = IncrementModel::queue(2.5, 0.5);
    const IncrementModel pareto = IncrementModel::pareto(1.75, 1.0, true);
    const IncrementModel pareto_sub = IncrementModel::pareto(1.3, 1.0, true);
    const std::vector<std::pair<std::string, const IncrementModel*>> models{
        {"product", &product}, {"queue", &queue}, {"pareto", &pareto}};

    record("Z_dom <= n Fbar(b)", [&](std::ostream& d) {
        const LdEstimator e(LdProblem{product, 100, 100.0});
        const double bound = std::exp(e.log_n_tail());
        double worst = 0.0;
        for (std::uint64_t i = 0; i < 2000; ++i) {
            RngStream rng(seed, i);
            worst = std::max(worst, e.sample_dom(rng).value / bound);
        }
        d << "max Z_dom / bound = " << worst;
        return worst <= 1.0 + 1e-12;
    });

    record("Z_k1 <= q_k and Z_k3 <= n_k Fbar(b + n_{k-1} mu)", [&](std::ostream& d) {
        const CrossingEstimator e(CrossingProblem{queue, queue.queue_drift(), 100.0, BlockScheme(2)});
        double w1 = 0.0, w3 = 0.0;
        for (int k = 1; k <= 8; ++k) {
            const double b3 = static_cast<double>(e.problem().scheme.n(k)) * e.block_tail(k);
            for (std::uint64_t i = 0; i < 300; ++i) {
                RngStream r1(seed, 1000 * k + i), r3 = r1.child(3);
                w1 = std::max(w1, e.sample_z1(k, r1).value / e.q(k));
                w3 = std::max(w3, e.sample_z3(k, r3).value / b3);
            }
        }
        d << "max ratios " << w1 << ", " << w3;
        return w1 <= 1.0 + 1e-12 && w3 <= 1.0 + 1e-12;
    });

    record("twisted samples < truncation point", [&](std::ostream& d) {
        std::uint64_t bad = 0, total = 0;
        for (const auto& [name, m] : models) {
            const double u = 50.0;
            const double theta = -std::log(20.0 * m->tail_at_least(u)) / u;
            const TwistedTruncated tw(*m, u, theta);
            RngStream rng(seed, 7);
            for (int i = 0; i < 100000; ++i, ++total)
                if (!(tw.sample(rng) < u)) ++bad;
        }
        d << bad << " of " << total << " at or above";
        return bad == 0;
    });

    record("conditional tail samples >= threshold", [&](std::ostream& d) {
        std::uint64_t bad = 0, total = 0;
        for (const auto& [name, m] : models) {
            for (double c : {-3.0, 0.0, 20.0, 1e4}) {
                RngStream rng(seed, 11);
                for (int i = 0; i < 20000; ++i, ++total)
                    if (!(m->sample_conditional_tail(c, rng) >= c)) ++bad;
            }
        }
        d << bad << " of " << total << " below";
        return bad == 0;
    });

    record("p_k telescoping sums to 1 in all regimes", [&](std::ostream& d) {
        struct Case {
            const IncrementModel* m;
            double mu;
            RegimeSpec spec;
        };
        const std::vector<Case> cases{{&queue, queue.queue_drift(), RegimeSpec{Regime::FiniteVariance}},
                                      {&pareto, 1.0, RegimeSpec{Regime::StrongEfficiency, 2.25}},
                                      {&pareto_sub, 1.0, RegimeSpec{Regime::SubStrong}}};
        double worst = 0.0;
        for (const Case& c : cases) {
            const BlockPmf pmf(CrossingProblem{*c.m, c.mu, 1000.0, BlockScheme(2)}, c.spec);
            const int kp = std::min(30, pmf.max_k());
            long double s = 0;
            for (int k = 1; k <= kp; ++k) s += pmf.p(k);
            worst = std::max(worst, static_cast<double>(std::abs(s + pmf.survival(kp) - 1.0L)));
        }
        d << "max deviation " << worst;
        return worst <= 1e-12;
    });

    record("Lambda_u(0) = log F(u)", [&](std::ostream& d) {
        double worst = 0.0;
        for (const auto& [name, m] : models) {
            for (double u : {-1.0, 0.5, 10.0, 1000.0}) {
                if (!(m->below(u) > 0.0)) continue;
                const TwistedTruncated tw(*m, u, 0.0);
                worst = std::max(worst, std::abs(tw.log_mgf() - std::log(m->below(u))));
            }
        }
        d << "max deviation " << worst;
        return worst <= 1e-9;
    });

    record("Lambda_u convex in theta", [&](std::ostream& d) {
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& [name, m] : models) {
            const double u = 100.0;
            std::vector<double> lam;
            for (int i = 0; i <= 10; ++i) lam.push_back(truncated_log_mgf(*m, u, 0.005 * i));
            for (std::size_t i = 1; i + 1 < lam.size(); ++i)
                worst = std::max(worst, lam[i] - 0.5 * (lam[i - 1] + lam[i + 1]));
        }
        d << "max excess over chord " << worst;
        return worst <= 1e-9;
    });

    record("harness determinism across thread counts", [&](std::ostream& d) {
        const CrossingEstimator e(CrossingProblem{queue, queue.queue_drift(), 100.0, BlockScheme(2)},
                                  RegimeSpec{});
        const Replication rep = [&e](std::uint64_t, RngStream& rng) { return e.sample(rng); };
        const RunStats a = run(rep, 500, 1, seed), b = run(rep, 500, 8, seed);
        const RunStats c = run_serial(rep, 500, seed);
        d << "means " << a.mean << " / " << b.mean << " / " << c.mean;
        return a.mean == b.mean && a.variance == b.variance && a.mean == c.mean && a.variance == c.variance &&
               a.mean_work == b.mean_work;
    });
    return checks;
}

} // namespace heavytail
