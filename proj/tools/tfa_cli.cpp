#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tfa/builders_kst.hpp"
#include "tfa/capacity.hpp"
#include "tfa/regression.hpp"
#include "tfa/verify.hpp"

using nlohmann::json;
using namespace tfa;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitViolation = 2;

const std::vector<std::string> kCommands{"approx-holder", "approx-sup", "approx-sobolev", "approx-kst",
                                         "verify-core",   "capacity",   "regress"};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Typed access to a config object; keys never read count as unknown.
class Params {
public:
    explicit Params(json j) : j_(std::move(j)) {
        if (!j_.is_object()) throw ConfigError("config must be a JSON object");
    }

    template <typename T>
    T get(const std::string& key, const T& fallback) {
        used_.insert(key);
        if (!j_.contains(key)) return fallback;
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    void reject_unknown() const {
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }

private:
    json j_;
    std::set<std::string> used_;
};

std::vector<std::size_t> size_list(Params& P, const std::string& key, std::vector<std::size_t> fallback) {
    if (!P.has(key)) return fallback;
    const json& v = P.raw(key);
    if (v.is_number_unsigned()) return {v.get<std::size_t>()};
    if (v.is_array()) {
        std::vector<std::size_t> out;
        for (const auto& e : v) {
            if (!e.is_number_unsigned()) throw ConfigError("config key '" + key + "' must hold positive integers");
            out.push_back(e.get<std::size_t>());
        }
        if (out.empty()) throw ConfigError("config key '" + key + "' is empty");
        return out;
    }
    throw ConfigError("config key '" + key + "' must be an integer or an array of integers");
}

void positive(double v, const std::string& what) {
    if (!(v > 0.0)) throw ConfigError(what + " must be > 0");
}

struct Output {
    std::filesystem::path dir;

    void write(const std::string& name, const std::string& content) const {
        std::filesystem::create_directories(dir);
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw ResourceError("cannot write " + (dir / name).string());
        f << content;
    }

    std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string join_lines(const std::string& header, const std::vector<std::string>& rows) {
    std::string out = header + "\n";
    for (const auto& r : rows) out += r + "\n";
    return out;
}

// ---------------------------------------------------------------------------

struct ApproxJob {
    std::string command;
    TargetFunction target;
    std::vector<std::size_t> Ks;
    double delta = 0.0;
    MeasureOptions mo;
    SobolevOptions so;
    bool save_networks = false;
};

ApproxJob parse_approx(const std::string& command, Params& P, std::uint64_t seed) {
    ApproxJob job;
    job.command = command;
    const auto d_x = P.get<std::size_t>("d_x", 1);
    const auto n = P.get<std::size_t>("n", 1);
    if (d_x == 0 || n == 0) throw ConfigError("d_x and n must be >= 1");
    const auto name = P.get<std::string>("target", command == "approx-sobolev" ? "sine_product" : "first_coordinate");
    const double gamma = P.get<double>("gamma", 1.0);
    const double K_H = P.get<double>("K_H", 1.0);
    const double c = P.get<double>("c", 1.0);
    job.target = targets::by_name(name, d_x, n, gamma, K_H, c);
    job.Ks = size_list(P, "K", {2});
    for (auto K : job.Ks)
        if (K == 0) throw ConfigError("K must be >= 1");
    job.delta = P.get<double>(command == "approx-kst" ? "margin" : "delta", 0.0);
    if (job.delta < 0.0) throw ConfigError("delta/margin must be >= 0 (0 selects the default)");
    job.mo.samples = P.get<std::size_t>("samples", 10000);
    job.mo.p = P.get<double>("p", 2.0);
    job.mo.seed = seed;
    job.mo.grid_resolution = P.get<std::size_t>("grid_resolution", command == "approx-sup" ? 200 : 0);
    if (job.mo.samples < 100) throw ConfigError("samples must be >= 100");
    if (!(job.mo.p >= 1.0)) throw ConfigError("p must be >= 1");
    if (command == "approx-sobolev") {
        job.so.C = P.get<double>("C", 1.0);
        positive(job.so.C, "C");
        const auto rule = P.get<std::string>("quadrature", "midpoint");
        if (rule == "midpoint")
            job.so.quadrature.rule = Quadrature::midpoint;
        else if (rule == "monte_carlo")
            job.so.quadrature.rule = Quadrature::monte_carlo;
        else
            throw ConfigError("quadrature must be 'midpoint' or 'monte_carlo'");
        job.so.quadrature.points = P.get<std::size_t>("quadrature_points", 4);
        job.so.quadrature.seed = seed;
    }
    job.save_networks = P.get<bool>("save_networks", false);
    return job;
}

int run_approx(const ApproxJob& job, const json& config, std::uint64_t hash, const Output& out) {
    json certs = json::array();
    std::vector<std::string> rows;
    bool all_pass = true;
    for (std::size_t K : job.Ks) {
        ApproxCertificate c;
        if (job.command == "approx-holder")
            c = assemble_holder_lp(job.target, K, job.delta, job.mo);
        else if (job.command == "approx-sup")
            c = assemble_sup_norm(job.target, K, job.delta, job.mo);
        else if (job.command == "approx-sobolev")
            c = assemble_sobolev_lp(job.target, K, job.delta, job.so, job.mo);
        else
            c = assemble_kst(job.target, K, job.delta, job.mo);
        all_pass = all_pass && c.pass;
        certs.push_back(certificate_to_json(c, job.save_networks));
        const auto& b = c.built_dims;
        rows.push_back(fmt::format("{},{},{},{},{},{:.17g},{},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{},{},{},{},{},{}", c.builder,
                                   c.target, job.target.d_x, job.target.n, K, c.delta, c.bound_kind, c.theoretical_bound,
                                   c.measured_sup.value, c.measured_lp.value, c.measured_lp.std_error, c.region,
                                   c.pass ? 1 : 0, b.D, b.H, b.S, b.W, b.L, param_count(b)));
        std::cout << fmt::format("{} target={} K={}: {} error {:.6g} vs bound {:.6g} -> {}\n", job.command, c.target, K,
                                 c.bound_kind, c.measured(), c.theoretical_bound, c.pass ? "PASS" : "VIOLATION");
    }
    const json report = {{"command", job.command}, {"config", config},   {"config_hash", fmt::format("{:016x}", hash)},
                         {"seed", job.mo.seed},    {"pass", all_pass},   {"certificates", certs}};
    out.write(job.command + ".json", report.dump(2) + "\n");
    out.write(job.command + ".csv",
              join_lines("builder,target,d_x,n,K,delta,bound_kind,theoretical_bound,measured_sup,measured_lp,lp_std_error,"
                         "region,pass,D,H,S,W,L,param_count",
                         rows));
    std::cout << fmt::format("wrote {} and {}\n", out.path(job.command + ".json"), out.path(job.command + ".csv"));
    return all_pass ? kExitPass : kExitViolation;
}

int run_verify(Params& P, std::uint64_t seed, const json& config, std::uint64_t hash, const Output& out) {
    const auto cases = P.get<std::size_t>("cases", 100000);
    if (cases == 0) throw ConfigError("cases must be >= 1");
    P.reject_unknown();
    const auto checks = verify_core(cases, seed);
    json arr = json::array();
    std::vector<std::string> rows;
    bool ok = true;
    for (const auto& c : checks) {
        ok = ok && c.pass;
        arr.push_back(check_to_json(c));
        rows.push_back(fmt::format("{},{},{:.17g},{:.17g},{}", c.name, c.cases, c.max_error, c.tolerance, c.pass ? 1 : 0));
        std::cout << fmt::format("verify-core {}: max error {:.3g} over {} cases -> {}\n", c.name, c.max_error, c.cases,
                                 c.pass ? "PASS" : "VIOLATION");
    }
    const json report = {{"command", "verify-core"}, {"config", config}, {"config_hash", fmt::format("{:016x}", hash)},
                         {"seed", seed},            {"pass", ok},       {"checks", arr}};
    out.write("verify-core.json", report.dump(2) + "\n");
    out.write("verify-core.csv", join_lines("check,cases,max_error,tolerance,pass", rows));
    std::cout << fmt::format("wrote {}\n", out.path("verify-core.csv"));
    return ok ? kExitPass : kExitViolation;
}

ArchSpec spec_from_config(const json& j) {
    static const std::set<std::string> fields{"d_x", "d_y", "n", "D", "H", "S", "W", "L"};
    if (!j.is_object()) throw ConfigError("each spec must be an object");
    for (const auto& [k, v] : j.items())
        if (!fields.count(k)) throw ConfigError("unknown spec field '" + k + "'");
    ArchSpec s;
    auto field = [&](const char* k, std::size_t& dst) {
        if (j.contains(k)) {
            if (!j.at(k).is_number_unsigned()) throw ConfigError(std::string("spec field '") + k + "' must be a positive integer");
            dst = j.at(k).get<std::size_t>();
        }
    };
    field("d_x", s.d_x);
    field("d_y", s.d_y);
    field("n", s.n);
    field("D", s.D);
    field("H", s.H);
    field("S", s.S);
    field("W", s.W);
    field("L", s.L);
    try {
        s.validate();
    } catch (const StructuralError& e) {
        throw ConfigError(e.what());
    }
    return s;
}

int run_capacity(Params& P, const json& config, std::uint64_t hash, const Output& out) {
    if (!P.has("specs")) throw ConfigError("capacity needs a 'specs' list");
    const json& list = P.raw("specs");
    if (!list.is_array() || list.empty()) throw ConfigError("'specs' must be a nonempty array");
    std::vector<ArchSpec> specs;
    for (const auto& e : list) specs.push_back(spec_from_config(e));
    const double delta = P.get<double>("delta", 0.01);
    const double m = P.get<double>("m", 1000.0);
    const double B = P.get<double>("B", 1.0);
    positive(delta, "delta");
    positive(B, "B");
    if (!(m >= 1.0)) throw ConfigError("m must be >= 1");
    P.reject_unknown();
    std::vector<std::string> rows;
    for (const auto& s : specs) {
        const auto r = capacity_row(s, delta, m, B);
        rows.push_back(to_csv_row(r));
        std::cout << fmt::format("capacity {}: d={} t={} q={} vc={:.6g} covering={:.6g}\n", s.to_string(), r.counts.d,
                                 r.counts.t, r.counts.q, r.vc, r.covering);
    }
    out.write("capacity.csv", join_lines(capacity_csv_header(), rows));
    const json report = {{"command", "capacity"}, {"config", config}, {"config_hash", fmt::format("{:016x}", hash)},
                         {"rows", specs.size()}};
    out.write("capacity.json", report.dump(2) + "\n");
    std::cout << fmt::format("wrote {}\n", out.path("capacity.csv"));
    return kExitPass;
}

int run_regress(Params& P, std::uint64_t seed, const json& config, std::uint64_t hash, const Output& out) {
    SweepConfig cfg;
    const auto regime = P.get<std::string>("regime", "iid");
    cfg.process.kind = process_kind_from_string(regime);
    cfg.process.a = P.get<double>("a", 0.25);
    cfg.process.b = P.get<double>("b", 0.25);
    cfg.process.r = P.get<double>("r", 1.0);
    cfg.process.d_x = P.get<std::size_t>("d_x", 1);
    cfg.regime = {cfg.process.kind, P.get<double>("regime_rate", 1.0)};
    if (cfg.process.kind == ProcessKind::algebraic_renewal) cfg.regime.r = cfg.process.r;
    cfg.n = P.get<std::size_t>("n", 2);
    cfg.target = P.get<std::string>("target", "sine_product");
    cfg.gamma = P.get<double>("gamma", 1.0);
    cfg.K_H = P.get<double>("K_H", 1.0);
    cfg.m_list = size_list(P, "m_list", cfg.m_list);
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 5; ++s) seeds.push_back(seed + s);
    cfg.seeds = P.get<std::vector<std::uint64_t>>("seeds", seeds);
    cfg.sigma = P.get<double>("sigma", 0.1);
    cfg.steps = P.get<std::size_t>("steps", cfg.steps);
    cfg.lr = P.get<double>("lr", cfg.lr);
    cfg.init_scale = P.get<double>("init_scale", cfg.init_scale);
    cfg.eval_samples = P.get<std::size_t>("eval_samples", cfg.eval_samples);
    P.reject_unknown();
    cfg.process.validate();
    if (cfg.m_list.size() < 3) throw ConfigError("regress: rate fit needs at least 3 values in m_list");
    const auto res = regression_sweep(cfg);
    std::vector<std::string> run_rows;
    for (const auto& r : res.runs) run_rows.push_back(to_csv_row(r));
    out.write("regress_runs.csv", join_lines(risk_csv_header(), run_rows));
    out.write("regress_summary.csv", join_lines(summary_csv_header(), summary_csv_rows(res)));
    json summary = json::array();
    for (const auto& s : res.summary) summary.push_back({{"m", s.m}, {"median_risk", s.median_risk}, {"mean_risk", s.mean_risk}});
    const json report = {{"command", "regress"},
                         {"config", config},
                         {"config_hash", fmt::format("{:016x}", hash)},
                         {"seeds", cfg.seeds},
                         {"estimator", "approximate ERM (Adam, full batch, best iterate)"},
                         {"summary", summary},
                         {"fitted_slope", res.fit.slope},
                         {"slope_std_error", res.fit.slope_std_error},
                         {"r2", res.fit.r2},
                         {"predicted_exponent", res.predicted_exponent}};
    out.write("regress.json", report.dump(2) + "\n");
    for (const auto& s : res.summary) std::cout << fmt::format("regress {} m={}: median excess risk {:.6g}\n", regime, s.m, s.median_risk);
    std::cout << fmt::format("regress {}: fitted slope {:.4f} (+- {:.4f}), predicted exponent {:.4f}; wrote {}\n", regime,
                             res.fit.slope, res.fit.slope_std_error, res.predicted_exponent, out.path("regress_summary.csv"));
    return kExitPass;
}

int dispatch(const std::string& command, json config, std::uint64_t seed, const Output& out) {
    config["command"] = command;
    config["seed"] = seed;
    const std::uint64_t hash = fnv1a(config.dump());
    Params P(config);
    P.get<std::string>("command", "");
    P.get<std::uint64_t>("seed", 0);
    P.get<std::string>("out", "");
    P.get<unsigned>("threads", 1);
    if (command.rfind("approx-", 0) == 0) {
        const ApproxJob job = parse_approx(command, P, seed);
        P.reject_unknown();
        return run_approx(job, config, hash, out);
    }
    if (command == "verify-core") return run_verify(P, seed, config, hash, out);
    if (command == "capacity") return run_capacity(P, config, hash, out);
    return run_regress(P, seed, config, hash, out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constructive Transformer approximation laboratory"};
    std::string command, config_path, out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    app.add_option("command", command, "approx-holder | approx-sup | approx-sobolev | approx-kst | verify-core | capacity | regress");
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory (default: out)");
    auto* seed_opt = app.add_option("--seed", seed, "global seed");
    auto* thr_opt = app.add_option("--threads", threads, "worker threads");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitPass : kExitError;
    }
    try {
        json config = json::object();
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw ConfigError("cannot open config '" + config_path + "'");
            try {
                config = json::parse(f);
            } catch (const json::parse_error& e) {
                throw ConfigError(std::string("config parse error: ") + e.what());
            }
            if (!config.is_object()) throw ConfigError("config must be a JSON object");
        }
        if (config.contains("command")) {
            if (!config["command"].is_string()) throw ConfigError("'command' must be a string");
            const auto c = config["command"].get<std::string>();
            if (!command.empty() && command != c) throw ConfigError("command '" + command + "' disagrees with config '" + c + "'");
            command = c;
        }
        if (command.empty()) throw ConfigError("no command given");
        if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
            throw ConfigError("unknown command '" + command + "'");
        if (!seed_opt->count() && config.contains("seed")) seed = config["seed"].get<std::uint64_t>();
        if (out_dir.empty()) out_dir = config.value("out", std::string("out"));
        if (!thr_opt->count() && config.contains("threads")) threads = config["threads"].get<unsigned>();
        if (threads == 0) threads = 1;
        set_default_threads(threads);
        config.erase("out");
        config.erase("threads");
        return dispatch(command, config, seed, Output{out_dir});
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const ResourceError& e) {
        std::cerr << "resource error: " << e.what() << "\n";
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return kExitError;
}
