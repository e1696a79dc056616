#include "rmpa/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmpa/data_io.hpp"
#include "rmpa/experiments.hpp"
#include "rmpa/models.hpp"
#include "rmpa/version.hpp"

namespace rmpa::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitInput = 2;
constexpr int kExitIterationLimit = 3;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CommonArgs {
    std::string model;
    std::string data;
    std::string config_path;
    std::string out;
    bool nominal = false;
    std::string set_kind;  // empty = take from config
    double level = -1.0;   // < 0 = take from config
    double omega = -1.0;
    int workers = 0;       // 0 = resolve from env/config/hardware
    long long seed = -1;   // < 0 = take from config
};

struct Resolved {
    std::string model;
    std::string mode;  // nominal | box | ellipsoid
    SetConfig set;
    RobustOptions robust;
    uint64_t solver_seed = 0;
    TechParams tech;
    FuelParams fuel;
};

int resolve_workers(const CommonArgs& args, const ConfigTable& cfg) {
    if (args.workers > 0) return args.workers;
    if (const char* env = std::getenv("RMPA_WORKERS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
        throw ConfigError(std::string("RMPA_WORKERS: cannot parse '") + env + "'");
    }
    if (cfg.has("robust.workers")) return std::max(1, cfg.get_int("robust.workers", 1));
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

Resolved resolve(const CommonArgs& args, const ConfigTable& cfg) {
    Resolved r;
    r.model = args.model;

    if (args.nominal) {
        r.mode = "nominal";
    } else if (!args.set_kind.empty()) {
        r.mode = args.set_kind;
    } else {
        r.mode = cfg.get_enum("set.kind", {"box", "ellipsoid"}, "box");
    }
    r.set.kind = r.mode == "ellipsoid" ? UncertaintySet::Kind::Ellipsoid
                                       : UncertaintySet::Kind::Box;
    r.set.level = args.level >= 0.0 ? args.level : cfg.get_double("set.level", 0.0);
    r.set.omega = args.omega >= 0.0 ? args.omega : cfg.get_double("set.omega", 1.0);
    r.set.family_levels = cfg.prefixed_doubles("set.level.");

    r.robust.tol = cfg.get_double("robust.tol", 1e-4);
    r.robust.max_iter = cfg.get_int("robust.max_iter", 100);
    r.robust.seed = args.seed >= 0 ? static_cast<uint64_t>(args.seed)
                                   : cfg.get_seed("robust.seed", 0);
    r.robust.workers = resolve_workers(args, cfg);
    r.robust.pess_starts = cfg.get_int("solver.starts", 16);
    r.robust.upper_starts = cfg.get_int("solver.starts_upper", 8);
    r.robust.nlp.feas_tol = cfg.get_double("solver.feas_tol", 1e-8);
    r.robust.nlp.stat_tol = cfg.get_double("solver.stat_tol", 1e-6);
    r.robust.nlp.max_outer = cfg.get_int("solver.max_outer", 50);
    r.solver_seed = cfg.get_seed("solver.seed", 0);

    r.tech.eta = cfg.get_double("model.eta", r.tech.eta);
    r.tech.c0 = cfg.get_double("model.c0", r.tech.c0);
    r.tech.a0 = cfg.get_double("model.a0", r.tech.a0);
    r.tech.lr = cfg.get_double("model.lr", r.tech.lr);
    r.tech.mu = cfg.get_double("model.mu", r.tech.mu);
    r.tech.t_max = cfg.get_double("model.t_max", r.tech.t_max);
    r.tech.cost_basis = cfg.get_enum("model.cost_basis", {"initial", "learned"}, "learned");
    r.tech.mu_direction = cfg.get_enum("model.mu_direction", {"min", "cap"}, "min");

    r.fuel.lhv_f1 = cfg.get_double("model.lhv_f1", r.fuel.lhv_f1);
    r.fuel.lhv_f2 = cfg.get_double("model.lhv_f2", r.fuel.lhv_f2);
    r.fuel.c_f1 = cfg.get_double("model.c_f1", r.fuel.c_f1);
    r.fuel.eta_f2 = cfg.get_double("model.eta_f2", r.fuel.eta_f2);
    r.fuel.g_max = cfg.get_double("model.g_max", r.fuel.g_max);
    if (r.model == "fuel") {
        r.fuel.c0 = cfg.get_double("model.c0", r.fuel.c0);
        r.fuel.a0 = cfg.get_double("model.a0", r.fuel.a0);
        r.fuel.lr = cfg.get_double("model.lr", r.fuel.lr);
        r.fuel.mu = cfg.get_double("model.mu", r.fuel.mu);
        r.fuel.cost_basis = cfg.get_enum("model.cost_basis", {"initial", "learned"}, "initial");
        r.fuel.mu_direction = cfg.get_enum("model.mu_direction", {"min", "cap"}, "min");
    }
    return r;
}

struct BuiltModel {
    UncertainProblem problem;
    std::string data_digest;
    std::vector<std::string> ids;  // entity ids in family order
};

BuiltModel build_model(const Resolved& r, const std::string& data) {
    BuiltModel built;
    if (r.model == "tech") {
        if (data.empty()) throw DataError("--data is required for the tech model");
        std::vector<Plant> plants = load_plants(data);
        built.problem = build_tech_problem(plants, r.tech);
        built.data_digest = file_digest(data);
        for (const auto& p : plants) built.ids.push_back(p.id);
    } else if (r.model == "fuel") {
        if (data.empty()) throw DataError("--data is required for the fuel model");
        std::vector<std::string> warnings;
        std::vector<Boiler> boilers = load_boilers(data, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        built.problem = build_fuel_problem(boilers, r.fuel);
        built.data_digest = file_digest(data);
        for (const auto& b : boilers) built.ids.push_back(b.id);
    } else if (r.model == "toy2d") {
        built.problem = build_toy2d_problem();
        built.data_digest = "builtin:toy2d";
    } else {
        throw DataError("unknown model '" + r.model + "' (tech, fuel, toy2d)");
    }
    return built;
}

json config_snapshot(const Resolved& r) {
    // everything that determines the result; worker count deliberately
    // excluded (it only affects scheduling)
    json c;
    c["set.kind"] = r.mode == "nominal" ? "nominal" : r.mode;
    c["set.level"] = r.set.level;
    if (r.mode == "ellipsoid") c["set.omega"] = r.set.omega;
    for (const auto& [fam, lvl] : r.set.family_levels) c["set.level." + fam] = lvl;
    c["robust.tol"] = r.robust.tol;
    c["robust.max_iter"] = r.robust.max_iter;
    c["robust.seed"] = r.robust.seed;
    c["solver.starts"] = r.robust.pess_starts;
    c["solver.starts_upper"] = r.robust.upper_starts;
    c["solver.seed"] = r.solver_seed;
    c["solver.feas_tol"] = r.robust.nlp.feas_tol;
    c["solver.stat_tol"] = r.robust.nlp.stat_tol;
    c["solver.max_outer"] = r.robust.nlp.max_outer;
    if (r.model == "tech") {
        c["model.eta"] = r.tech.eta;
        c["model.c0"] = r.tech.c0;
        c["model.a0"] = r.tech.a0;
        c["model.lr"] = r.tech.lr;
        c["model.mu"] = r.tech.mu;
        c["model.t_max"] = r.tech.effective_t_max();
        c["model.cost_basis"] = r.tech.cost_basis;
        c["model.mu_direction"] = r.tech.mu_direction;
    } else if (r.model == "fuel") {
        c["model.lhv_f1"] = r.fuel.lhv_f1;
        c["model.lhv_f2"] = r.fuel.lhv_f2;
        c["model.c_f1"] = r.fuel.c_f1;
        c["model.eta_f2"] = r.fuel.eta_f2;
        c["model.c0"] = r.fuel.c0;
        c["model.a0"] = r.fuel.a0;
        c["model.lr"] = r.fuel.lr;
        c["model.mu"] = r.fuel.mu;
        c["model.g_max"] = r.fuel.effective_g_max();
        c["model.cost_basis"] = r.fuel.cost_basis;
        c["model.mu_direction"] = r.fuel.mu_direction;
    }
    return c;
}

json make_manifest(const std::string& command, const Resolved& r, const std::string& digest) {
    json m;
    m["command"] = command;
    m["model"] = r.model;
    m["mode"] = r.mode;
    m["config"] = config_snapshot(r);
    m["data_digest"] = digest;
    m["seed"] = r.robust.seed;
    m["version"] = kVersion;
    return m;
}

json policy_json(const BuiltModel& built, const Binding& x) {
    const UncertainProblem& p = built.problem;
    json policy = json::array();
    if (p.policy_names.empty()) {
        for (const auto& [name, value] : x)
            if (name != p.tau_name) policy.push_back({{"id", name}, {"value", value}});
        return policy;
    }
    const char* lever = built.ids.empty() || p.policy_names[0][0] == 't' ? "t" : "G";
    const char* share = lever[0] == 't' ? "m" : "phi";
    for (size_t i = 0; i < p.policy_names.size(); ++i) {
        json row;
        row["id"] = i < built.ids.size() ? built.ids[i] : p.policy_names[i];
        row[lever] = x.count(p.policy_names[i]) ? x.at(p.policy_names[i]) : 0.0;
        if (i < p.share_names.size())
            row[share] = x.count(p.share_names[i]) ? x.at(p.share_names[i]) : 0.0;
        policy.push_back(std::move(row));
    }
    return policy;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw DataError("write failed: " + path);
}

int status_exit_code(const std::string& status) {
    if (status == "robust-optimal" || status == "optimal-local") return kExitOk;
    if (status == "robust-infeasible" || status == "infeasible") return kExitInfeasible;
    return kExitIterationLimit;
}

int cmd_solve(const CommonArgs& args) {
    ConfigTable cfg =
        args.config_path.empty() ? ConfigTable() : ConfigTable::load(args.config_path);
    Resolved r = resolve(args, cfg);
    BuiltModel built = build_model(r, args.data);

    if (args.out.empty()) throw DataError("--out is required");

    auto t0 = std::chrono::steady_clock::now();
    json manifest = make_manifest("solve", r, built.data_digest);
    json extra = json::object();
    json timings = json::object();

    std::string status;
    double objective = 0.0;
    Binding x;
    int iterations = 0;
    if (r.mode == "nominal") {
        LocalSolution sol =
            solve_nominal(built.problem, r.robust.upper_starts, r.solver_seed, r.robust.nlp);
        status = to_string(sol.status);
        objective = sol.objective_value;
        x = sol.x;
        iterations = sol.iterations;
        extra["max_violation"] = sol.max_violation;
        timings["wall_total_s"] = seconds_since(t0);
    } else {
        RobustResult rr = solve_robust(built.problem, make_set(built.problem.uncertain, r.set),
                                       r.robust);
        status = to_string(rr.status);
        objective = rr.objective_value;
        x = rr.x;
        iterations = rr.iterations;
        json cuts = json::array();
        for (size_t i = 0; i < rr.cuts.size(); ++i)
            cuts.push_back({{"name", built.problem.constraints[i].name},
                            {"cuts", rr.cuts[i].size()}});
        extra["cuts_per_constraint"] = std::move(cuts);
        json log = json::array();
        for (const auto& rec : rr.log)
            log.push_back({{"iter", rec.iteration},
                           {"objective", rec.objective},
                           {"max_violation", rec.max_violation},
                           {"cuts_added", rec.cuts_added}});
        extra["log"] = std::move(log);
        timings["wall_total_s"] = seconds_since(t0);
        timings["upper_wall_s"] = rr.upper_wall_s;
        timings["pess_wall_s"] = rr.pess_wall_s;
    }
    timings["workers"] = r.robust.workers;
    manifest["timings"] = std::move(timings);

    json out;
    out["schema_version"] = kResultSchemaVersion;
    out["manifest"] = std::move(manifest);
    out["status"] = status;
    out["objective"] = objective;
    out["iterations"] = iterations;
    json xj = json::object();
    for (const auto& [name, value] : x) xj[name] = value;
    out["x"] = std::move(xj);
    out["policy"] = policy_json(built, x);
    for (auto& [key, value] : extra.items()) out[key] = std::move(value);

    write_json(args.out, out);
    std::cout << "status: " << status << "  objective: " << objective << "\n";
    return status_exit_code(status);
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::string cur;
    auto flush = [&]() {
        if (cur.empty()) return;
        char* end = nullptr;
        double v = std::strtod(cur.c_str(), &end);
        if (end != cur.c_str() + cur.size())
            throw DataError("cannot parse value '" + cur + "' in --values");
        out.push_back(v);
        cur.clear();
    };
    for (char c : csv) {
        if (c == ',')
            flush();
        else if (!std::isspace(static_cast<unsigned char>(c)))
            cur += c;
    }
    flush();
    if (out.empty()) throw DataError("--values is empty");
    return out;
}

int cmd_sweep(const CommonArgs& args, const std::string& kind, const std::string& values_csv,
              const std::string& family) {
    ConfigTable cfg =
        args.config_path.empty() ? ConfigTable() : ConfigTable::load(args.config_path);
    Resolved r = resolve(args, cfg);
    std::vector<double> values = parse_values(values_csv);
    if (args.out.empty()) throw DataError("--out is required");

    std::vector<SweepRow> rows;
    bool with_epsilon = false;
    if (kind == "level") {
        BuiltModel built = build_model(r, args.data);
        rows = sweep_level(built.problem, values, family, r.robust);
    } else if (kind == "omega") {
        BuiltModel built = build_model(r, args.data);
        rows = sweep_omega(built.problem, r.set.level, values, r.robust);
        with_epsilon = true;
    } else if (kind == "market-share") {
        if (r.model == "toy2d") throw DataError("toy2d has no market-share parameter");
        Resolved rr = r;
        std::function<UncertainProblem(double)> rebuild;
        if (r.model == "tech") {
            std::vector<Plant> plants = load_plants(args.data);
            rebuild = [rr, plants](double mu) {
                TechParams p = rr.tech;
                p.mu = mu;
                return build_tech_problem(plants, p);
            };
        } else {
            std::vector<Boiler> boilers = load_boilers(args.data);
            rebuild = [rr, boilers](double mu) {
                FuelParams p = rr.fuel;
                p.mu = mu;
                return build_fuel_problem(boilers, p);
            };
        }
        rows = sweep_market_share(rebuild, values, r.set, r.robust);
    } else {
        throw DataError("unknown sweep kind '" + kind + "' (level, omega, market-share)");
    }
    write_sweep_csv(args.out, rows, with_epsilon);
    std::cout << "wrote " << rows.size() << " rows to " << args.out << "\n";
    return kExitOk;
}

int cmd_verify(const CommonArgs& args, const std::string& result_path, int samples, double tol_arg) {
    if (samples < 1) throw DataError("--samples must be >= 1");

    std::ifstream in(result_path);
    if (!in) throw DataError("cannot open result " + result_path);
    json result = json::parse(in, nullptr, true, true);
    if (!result.contains("manifest") || !result.contains("x"))
        throw DataError(result_path + ": not a solve result (missing manifest or x)");
    const json& manifest = result["manifest"];
    const json& mconfig = manifest["config"];

    CommonArgs margs = args;
    margs.model = manifest["model"].get<std::string>();
    ConfigTable cfg =
        args.config_path.empty() ? ConfigTable() : ConfigTable::load(args.config_path);
    Resolved r = resolve(margs, cfg);

    // the solved problem's own parameters win over the config file
    auto mget = [&](const char* key, double fallback) {
        return mconfig.contains(key) ? mconfig[key].get<double>() : fallback;
    };
    if (r.model == "tech") {
        r.tech.eta = mget("model.eta", r.tech.eta);
        r.tech.c0 = mget("model.c0", r.tech.c0);
        r.tech.a0 = mget("model.a0", r.tech.a0);
        r.tech.lr = mget("model.lr", r.tech.lr);
        r.tech.mu = mget("model.mu", r.tech.mu);
        r.tech.t_max = mget("model.t_max", r.tech.t_max);
        if (mconfig.contains("model.cost_basis"))
            r.tech.cost_basis = mconfig["model.cost_basis"].get<std::string>();
        if (mconfig.contains("model.mu_direction"))
            r.tech.mu_direction = mconfig["model.mu_direction"].get<std::string>();
    } else if (r.model == "fuel") {
        r.fuel.lhv_f1 = mget("model.lhv_f1", r.fuel.lhv_f1);
        r.fuel.lhv_f2 = mget("model.lhv_f2", r.fuel.lhv_f2);
        r.fuel.c_f1 = mget("model.c_f1", r.fuel.c_f1);
        r.fuel.eta_f2 = mget("model.eta_f2", r.fuel.eta_f2);
        r.fuel.c0 = mget("model.c0", r.fuel.c0);
        r.fuel.a0 = mget("model.a0", r.fuel.a0);
        r.fuel.lr = mget("model.lr", r.fuel.lr);
        r.fuel.mu = mget("model.mu", r.fuel.mu);
        r.fuel.g_max = mget("model.g_max", r.fuel.g_max);
        if (mconfig.contains("model.cost_basis"))
            r.fuel.cost_basis = mconfig["model.cost_basis"].get<std::string>();
        if (mconfig.contains("model.mu_direction"))
            r.fuel.mu_direction = mconfig["model.mu_direction"].get<std::string>();
    }

    // set: CLI flags win, then the result's own set, then the config file
    if (args.set_kind.empty() && !args.nominal) {
        std::string mode = manifest["mode"].get<std::string>();
        if (mode == "box" || mode == "ellipsoid") {
            r.mode = mode;
            r.set.kind = mode == "ellipsoid" ? UncertaintySet::Kind::Ellipsoid
                                             : UncertaintySet::Kind::Box;
            if (args.level < 0.0) r.set.level = mget("set.level", r.set.level);
            if (args.omega < 0.0) r.set.omega = mget("set.omega", r.set.omega);
            r.set.family_levels.clear();
            for (auto& [key, value] : mconfig.items())
                if (key.rfind("set.level.", 0) == 0)
                    r.set.family_levels[key.substr(10)] = value.get<double>();
        }
    }

    BuiltModel built = build_model(r, args.data);
    if (built.data_digest != manifest["data_digest"].get<std::string>())
        throw DataError("--data does not match the result manifest digest (" +
                        built.data_digest + " vs " +
                        manifest["data_digest"].get<std::string>() + ")");

    Binding x;
    for (auto& [name, value] : result["x"].items()) x[name] = value.get<double>();

    double tol = tol_arg >= 0.0 ? tol_arg : r.robust.tol;
    uint64_t seed = args.seed >= 0 ? static_cast<uint64_t>(args.seed) : r.robust.seed + 1;
    UncertaintySet set = make_set(built.problem.uncertain, r.set);
    McReport report = monte_carlo_check(built.problem, set, x, samples, tol, seed);

    std::cout << "samples: " << report.samples << "\n"
              << "max_violation: " << report.max_violation << "\n"
              << "violation_rate: " << report.violation_rate << "\n";
    if (report.violation_rate > 0.0) {
        std::cout << "violating draw:";
        size_t shown = 0;
        for (const auto& [name, value] : report.worst_u) {
            std::cout << " " << name << "=" << value;
            if (++shown >= 8) {
                std::cout << " ...";
                break;
            }
        }
        std::cout << "\n";
        return kExitInfeasible;
    }
    return kExitOk;
}

int cmd_gen_data(const std::string& model, int n, long long seed, const std::string& out) {
    if (n < 1) throw DataError("--n must be >= 1");
    if (out.empty()) throw DataError("--out is required");
    generate_synthetic(model, n, seed < 0 ? 0 : static_cast<uint64_t>(seed), out);
    std::cout << "wrote " << n << " " << model << " rows to " << out << "\n";
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"robust market potential assessment toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string sweep_kind, sweep_values, sweep_family;
    std::string result_path;
    int samples = 0;
    double verify_tol = -1.0;
    std::string gen_model, gen_out;
    int gen_n = 0;
    long long gen_seed = 0;

    auto add_common = [&](CLI::App* cmd, bool with_set) {
        cmd->add_option("--model", args.model, "tech | fuel | toy2d");
        cmd->add_option("--data", args.data, "dataset CSV");
        cmd->add_option("--config", args.config_path, "flat key = value config file");
        cmd->add_option("--out", args.out, "output path");
        cmd->add_option("--workers", args.workers, "pessimization worker threads");
        cmd->add_option("--seed", args.seed, "robust solve seed");
        if (with_set) {
            cmd->add_flag("--nominal", args.nominal, "solve at nominal parameters only");
            cmd->add_option("--set", args.set_kind, "box | ellipsoid")
                ->check(CLI::IsMember({"box", "ellipsoid"}));
            cmd->add_option("--level", args.level, "uncertainty level (fraction of nominal)");
            cmd->add_option("--omega", args.omega, "ellipsoid radius");
        }
    };

    CLI::App* solve = app.add_subcommand("solve", "solve one robust or nominal instance");
    add_common(solve, true);

    CLI::App* sweep = app.add_subcommand("sweep", "run a level / omega / market-share sweep");
    add_common(sweep, true);
    sweep->add_option("--kind", sweep_kind, "level | omega | market-share")->required();
    sweep->add_option("--values", sweep_values, "comma-separated sweep values")->required();
    sweep->add_option("--symbol", sweep_family, "restrict a level sweep to one symbol family");

    CLI::App* verify = app.add_subcommand("verify", "Monte-Carlo check of a stored solution");
    add_common(verify, true);
    verify->add_option("--result", result_path, "result JSON from solve")->required();
    verify->add_option("--samples", samples, "number of Monte-Carlo draws")->required();
    verify->add_option("--tol", verify_tol, "violation tolerance (default robust.tol)");

    CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dataset");
    gen->add_option("--model", gen_model, "tech | fuel")->required();
    gen->add_option("--n", gen_n, "number of rows")->required();
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (solve->parsed()) return cmd_solve(args);
        if (sweep->parsed()) return cmd_sweep(args, sweep_kind, sweep_values, sweep_family);
        if (verify->parsed()) return cmd_verify(args, result_path, samples, verify_tol);
        if (gen->parsed()) return cmd_gen_data(gen_model, gen_n, gen_seed, gen_out);
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}

int run(const std::vector<std::string>& args) {
    std::vector<std::string> full;
    full.push_back("rmpa");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const auto& s : full) argv.push_back(s.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace rmpa::cli
