// Command-line harness: analysis curves, optimizer runs, linear and semilinear experiments,
// stability loci, contour maps and J-order tables. Outputs are CSV and JSON files.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "parareal/analysis.hpp"
#include "parareal/io.hpp"
#include "parareal/optimizer.hpp"
#include "parareal/parareal.hpp"
#include "parareal/problems.hpp"
#include "parareal/propagators.hpp"

namespace fs = std::filesystem;
using namespace parareal;
using io::json;

namespace {

struct Globals {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string profile = "paper";
    bool no_timing = false;
};

json load_config(const Globals& g) {
    if (g.config.empty()) return json::object();
    json cfg = io::read_json(g.config);
    if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
    return cfg;
}

template <typename T>
T opt(const json& cfg, const char* key, T def) {
    if (!cfg.contains(key)) return def;
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

int default_cells(const Globals& g) {
    if (g.profile == "paper") return 1000;
    if (g.profile == "test") return 200;
    throw ConfigError("unknown profile '" + g.profile + "' (expected paper or test)");
}

std::uint64_t seed_of(const Globals& g, const json& cfg) { return g.seed ? *g.seed : opt<std::uint64_t>(cfg, "seed", 0); }

fs::path prepare_out(const Globals& g) {
    fs::path out(g.out);
    fs::create_directories(out);
    return out;
}

/// A catalog name, a name with "-e" suffix, or a path to a scheme JSON file.
struct CpEntry {
    std::string label;
    std::string cp;
    std::optional<Scheme> scheme;
};

CpEntry resolve_cp(const std::string& entry) {
    if (entry.size() > 5 && entry.substr(entry.size() - 5) == ".json") {
        Scheme s = io::load_scheme_file(entry);
        const std::string name = scheme_name(s);
        return {name, name, std::move(s)};
    }
    (void)catalog(detail::base_name(entry));
    return {entry, entry, std::nullopt};
}

std::vector<std::string> cp_list(const json& cfg, std::vector<std::string> def) {
    if (!cfg.contains("cp")) return def;
    if (cfg.at("cp").is_string()) return {cfg.at("cp").get<std::string>()};
    return opt<std::vector<std::string>>(cfg, "cp", def);
}

TwoStepScheme two_step_entry(const std::string& entry) {
    const CpEntry e = resolve_cp(entry);
    const Scheme s = e.scheme ? *e.scheme : catalog(entry);
    if (const auto* ts = std::get_if<TwoStepScheme>(&s)) return *ts;
    throw ConfigError(entry + " is not a two-step scheme");
}

// ---------------------------------------------------------------------------

int cmd_analyze(const Globals& g) {
    const json cfg = load_config(g);
    const fs::path out = prepare_out(g);
    const auto cps = cp_list(cfg, {"o2cp"});
    const std::string fp = opt<std::string>(cfg, "fp", "radau_iia_3");
    const auto j_list = opt<std::vector<int>>(cfg, "J_list", {10, 20, 40, 80});
    const int nc = opt<int>(cfg, "Nc", 1000);
    const SpectralGrid grid = SpectralGrid::default_grid();
    const RationalFunction r = single_step(fp).stability;

    json summary = json::object();
    for (const auto& entry : cps) {
        const CpEntry e = resolve_cp(entry);
        const Scheme scheme = e.scheme ? *e.scheme : catalog(e.cp);
        json js{{"scheme", e.label}, {"fp", fp}, {"Nc", nc}};
        if (const auto* ss = std::get_if<SingleStepScheme>(&scheme)) {
            const auto curve = sup_over_grid([&](double s) { return single_step_gamma(ss->stability, s); }, grid, g.threads);
            io::CsvWriter w(out / ("gamma_e_" + e.label + ".csv"), {"s", "gamma"});
            for (std::size_t i = 0; i < grid.size(); ++i) w.row({grid.samples[i], curve.values[i]});
            js["kind"] = "single_step";
            js["gamma_e_star"] = curve.sup;
            js["gamma_e_argmax"] = curve.argmax;
            summary[e.label] = js;
            continue;
        }
        const auto& ts = std::get<TwoStepScheme>(scheme);
        {
            io::CsvWriter w(out / ("rho_" + e.label + ".csv"), {"s", "rho1_abs", "rho2_abs"});
            for (double s : grid.samples) {
                const auto rho = rho_pair(ts, s);
                w.row({s, std::abs(rho.first), std::abs(rho.second)});
            }
        }
        const auto ge = sup_over_grid([&](double s) { return gamma_e(ts, s); }, grid, g.threads);
        const auto ke = sup_over_grid([&](double s) { return kappa_e(ts, s, nc); }, grid, g.threads);
        {
            io::CsvWriter w(out / ("factors_e_" + e.label + ".csv"), {"s", "gamma_e", "kappa_e"});
            for (std::size_t i = 0; i < grid.size(); ++i) w.row({grid.samples[i], ge.values[i], ke.values[i]});
        }
        std::vector<std::string> header{"s"};
        for (int J : j_list) header.push_back("J" + std::to_string(J));
        io::CsvWriter wg(out / ("gamma_c_" + e.label + ".csv"), header);
        io::CsvWriter wk(out / ("kappa_c_" + e.label + ".csv"), header);
        std::vector<FactorCurve> gcs, kcs;
        json gstar = json::object(), kstar = json::object();
        for (int J : j_list) {
            gcs.push_back(sup_over_grid([&](double s) { return gamma_c(r, ts, J, s); }, grid, g.threads));
            kcs.push_back(sup_over_grid([&](double s) { return kappa_c(r, ts, J, s, nc); }, grid, g.threads));
            gstar[std::to_string(J)] = gcs.back().sup;
            kstar[std::to_string(J)] = kcs.back().sup;
        }
        for (std::size_t i = 0; i < grid.size(); ++i) {
            std::vector<double> rg{grid.samples[i]}, rk{grid.samples[i]};
            for (std::size_t c = 0; c < j_list.size(); ++c) {
                rg.push_back(gcs[c].values[i]);
                rk.push_back(kcs[c].values[i]);
            }
            wg.row(rg);
            wk.row(rk);
        }
        js["kind"] = "two_step";
        js["alpha"] = {ts.alpha[0], ts.alpha[1], ts.alpha[2]};
        js["beta"] = {ts.beta[0], ts.beta[1], ts.beta[2]};
        js["gamma_e_star"] = ge.sup;
        js["gamma_e_argmax"] = ge.argmax;
        js["kappa_e_star"] = ke.sup;
        js["gamma_star"] = gstar;
        js["kappa_star"] = kstar;
        summary[e.label] = js;
    }
    io::write_json(out / "analysis.json", summary);
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_optimize(const Globals& g) {
    const json cfg = load_config(g);
    const fs::path out = prepare_out(g);
    OptimizerConfig oc;
    oc.mu0 = opt(cfg, "mu0", oc.mu0);
    oc.sigma = opt(cfg, "sigma", oc.sigma);
    oc.outer_iters = opt(cfg, "outer_iters", oc.outer_iters);
    oc.inner_iters = opt(cfg, "inner_iters", oc.inner_iters);
    oc.step0 = opt(cfg, "step0", oc.step0);
    oc.step_decay = opt(cfg, "step_decay", oc.step_decay);
    oc.grad_tolerance = opt(cfg, "grad_tolerance", oc.grad_tolerance);
    oc.seed = seed_of(g, cfg);
    std::string init_label = "random";
    if (cfg.contains("init")) {
        const auto& init = cfg.at("init");
        if (init.is_object()) {
            oc.init = io::theta_from_json(init);
            init_label = "custom";
        } else {
            init_label = init.get<std::string>();
        }
    }
    if (!oc.init) {
        if (init_label == "zero") oc.init = ThetaParams{};
        else if (init_label == "o2cp") oc.init = o2cp_theta();
        else if (init_label != "random") throw ConfigError("init must be zero, random, o2cp or a theta object");
    }
    const std::string name = opt<std::string>(cfg, "name", "o2cp_optimized");
    const auto result = optimize(oc);
    const TwoStepScheme ts = two_step_from_theta(result.theta, name);
    const auto ge = sup_over_grid([&](double s) { return gamma_e(ts, s); }, oc.grid, g.threads);

    io::write_optimizer_trace_csv(out / "optimizer_trace.csv", result.trace);
    io::write_json(out / "scheme.json", io::scheme_to_json(ts, result.theta));
    json summary{{"init", init_label},
                 {"init_theta", io::to_json(result.trace.init)},
                 {"seed", oc.seed},
                 {"theta", io::to_json(result.theta)},
                 {"alpha", {ts.alpha[0], ts.alpha[1], ts.alpha[2]}},
                 {"beta", {ts.beta[0], ts.beta[1], ts.beta[2]}},
                 {"loss_s", result.trace.best_loss_s},
                 {"gamma_e_star", ge.sup},
                 {"steps", result.trace.steps.size()},
                 {"early_stopped", result.trace.early_stopped}};
    io::write_json(out / "optimize.json", summary);
    std::cout << summary.dump(2) << '\n';
    return 0;
}

struct RunOutcome {
    IterationTrace trace;
    double cost = 0.0;
};

RunOutcome run_one(PararealConfig pc, const CpEntry& e, const Problem& prob, const SolutionLattice& ref,
                   bool timing) {
    pc.cp = e.cp;
    pc.cp_scheme = e.scheme;
    pc.record_lattice = false;
    RunOutcome r;
    r.trace = run_parareal(pc, prob.sys, prob.u0, ref);
    r.cost = timing ? coarse_sweep_cost(pc, prob.sys, ref, 3) : 0.0;
    return r;
}

json row_common(const RunOutcome& r, double fine_cost, bool timing) {
    json row;
    row["iterations"] = r.trace.iterations_to_tol ? json(*r.trace.iterations_to_tol) : json(nullptr);
    try {
        row["gamma_hat"] = io::number(empirical_factor(r.trace));
    } catch (const InsufficientTrace&) {
        row["gamma_hat"] = nullptr;
    }
    row["cost"] = r.cost;
    if (timing && r.trace.iterations_used() > 0) {
        row["speedup"] = io::number(speedup(fine_cost, r.trace.iterations_used(), r.cost, r.trace.mean_fp_cost()));
    } else {
        row["speedup"] = nullptr;
    }
    row["final_error"] = r.trace.iterations.back().error;
    return row;
}

int cmd_linear(const Globals& g) {
    const json cfg = load_config(g);
    const fs::path out = prepare_out(g);
    const LinearCase lc = parse_linear_case(opt<std::string>(cfg, "case", "i"));
    const int cells = opt(cfg, "n_cells", default_cells(g));
    const SourceForm form = parse_source_form(opt<std::string>(cfg, "source", "printed"));
    const Problem prob = make_linear_problem(lc, cells, form);
    PararealConfig pc;
    pc.T = prob.T;
    pc.J = opt(cfg, "J", 50);
    pc.dt = opt(cfg, "dt", 0.01);
    pc.fp = opt<std::string>(cfg, "fp", "radau_iia_3");
    pc.K_max = opt(cfg, "K_max", 30);
    pc.tol = opt(cfg, "tol", 1e-9);
    pc.seed = seed_of(g, cfg);
    pc.init_mode = parse_init_mode(opt<std::string>(cfg, "init", "random"));
    pc.threads = g.threads;
    const int nc_kappa = opt(cfg, "Nc_kappa", 1000);
    const bool timing = !g.no_timing;

    const auto ref = fine_reference(pc, prob.sys, prob.u0);
    const double fine_cost = timing ? ref.wall_time : 0.0;
    json rows = json::array();
    for (const auto& entry : cp_list(cfg, {"sdirk2", "bdf2", "ocp", "o2cp"})) {
        const CpEntry e = resolve_cp(entry);
        const RunOutcome r = run_one(pc, e, prob, ref, timing);
        io::write_trace_csv(out / ("trace_" + e.label + ".csv"), r.trace, timing);
        json row = row_common(r, fine_cost, timing);
        row["cp"] = e.label;
        row["two_step"] = r.trace.two_step;
        const Scheme scheme = e.scheme ? *e.scheme : catalog(detail::base_name(e.cp));
        const SpectralGrid grid = SpectralGrid::default_grid();
        if (const auto* ts = std::get_if<TwoStepScheme>(&scheme)) {
            row["gamma_e_star"] = sup_over_grid([&](double s) { return gamma_e(*ts, s); }, grid, g.threads).sup;
            row["kappa_e_star"] = sup_over_grid([&](double s) { return kappa_e(*ts, s, nc_kappa); }, grid, g.threads).sup;
        } else {
            const auto& ss = std::get<SingleStepScheme>(scheme);
            row["gamma_e_star"] =
                sup_over_grid([&](double s) { return single_step_gamma(ss.stability, s); }, grid, g.threads).sup;
            row["kappa_e_star"] = nullptr;
        }
        row["finite_convergence"] = finite_convergence_holds(r.trace);
        rows.push_back(row);
    }
    json table{{"case", to_string(lc)},
               {"J", pc.J},
               {"dt", pc.dt},
               {"T", pc.T},
               {"n_cells", cells},
               {"fp", pc.fp},
               {"source", form == SourceForm::Printed ? "printed" : "manufactured"},
               {"seed", pc.seed},
               {"tol", pc.tol},
               {"Nc_kappa", nc_kappa},
               {"fine_cost", fine_cost},
               {"rows", rows}};
    io::write_json(out / "table1.json", table);
    std::cout << table.dump(2) << '\n';
    return 0;
}

int cmd_nonlinear(const Globals& g) {
    const json cfg = load_config(g);
    const fs::path out = prepare_out(g);
    const auto c_list = opt<std::vector<double>>(cfg, "c_L", {1.0, 5.0, 10.0});
    const auto j_list = opt<std::vector<int>>(cfg, "J", {20, 50});
    const int cells = opt(cfg, "n_cells", default_cells(g));
    const bool timing = !g.no_timing;
    const auto cps = cp_list(cfg, {"sdirk2", "bdf2", "ocp-e", "o2cp", "o2cp-e"});

    json cases = json::array();
    for (double cl : c_list) {
        const Problem prob = make_semilinear_problem(cl, cells);
        for (int J : j_list) {
            PararealConfig pc;
            pc.T = prob.T;
            pc.J = J;
            pc.dt = 0.01 / cl;
            pc.fp = opt<std::string>(cfg, "fp", "radau_iia_3");
            pc.K_max = opt(cfg, "K_max", 30);
            pc.tol = opt(cfg, "tol", 1e-9);
            pc.seed = seed_of(g, cfg);
            pc.init_mode = parse_init_mode(opt<std::string>(cfg, "init", "random"));
            pc.threads = g.threads;
            const auto ref = fine_reference(pc, prob.sys, prob.u0);
            const double fine_cost = timing ? ref.wall_time : 0.0;
            json rows = json::array();
            for (const auto& entry : cps) {
                const CpEntry e = resolve_cp(entry);
                const RunOutcome r = run_one(pc, e, prob, ref, timing);
                char tag[64];
                std::snprintf(tag, sizeof tag, "trace_cL%g_J%d_", cl, J);
                io::write_trace_csv(out / (tag + e.label + ".csv"), r.trace, timing);
                json row = row_common(r, fine_cost, timing);
                row["cp"] = e.label;
                row["two_step"] = r.trace.two_step;
                rows.push_back(row);
            }
            cases.push_back({{"c_L", cl}, {"J", J}, {"dt", pc.dt}, {"fine_cost", fine_cost}, {"rows", rows}});
        }
    }
    json table{{"n_cells", cells},
               {"T", 10.0},
               {"fp", opt<std::string>(cfg, "fp", "radau_iia_3")},
               {"seed", seed_of(g, cfg)},
               {"tol", opt(cfg, "tol", 1e-9)},
               {"cases", cases}};
    io::write_json(out / "table2.json", table);
    std::cout << table.dump(2) << '\n';
    return 0;
}

int cmd_stability(const Globals& g) {
    const json cfg = load_config(g);
    const fs::path out = prepare_out(g);
    const int samples = opt(cfg, "samples", 10000);
    const int locus_points = opt(cfg, "locus_points", 2000);
    json summary = json::object();
    for (const auto& entry : cp_list(cfg, {"o2cp", "bdf2"})) {
        const TwoStepScheme ts = two_step_entry(entry);
        const auto locus = boundary_locus(ts, locus_points);
        io::CsvWriter w(out / ("locus_" + ts.name + ".csv"), {"theta", "re", "im"});
        for (const auto& p : locus.points) w.row({p.theta, p.mu.real(), p.mu.imag()});
        const auto rep = a_stability_check(ts, samples);
        int order = 0;
        bool consistent = true;
        try {
            order = consistency_order(ts, 4);
        } catch (const NotConsistent&) {
            consistent = false;
        }
        summary[ts.name] = {{"a_stable", rep.a_stable},
                            {"worst_value", rep.worst_value},
                            {"worst_theta", rep.worst_theta},
                            {"consistent", consistent},
                            {"consistency_order", order},
                            {"samples", samples}};
    }
    io::write_json(out / "stability.json", summary);
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_contour(const Globals& g) {
    const json cfg = load_config(g);
    const fs::path out = prepare_out(g);
    const auto re = opt<std::vector<double>>(cfg, "re", {0.0, 10.0});
    const auto im = opt<std::vector<double>>(cfg, "im", {-10.0, 10.0});
    const auto res = opt<std::vector<int>>(cfg, "resolution", {101, 101});
    const int nc = opt(cfg, "Nc", 1000);
    if (re.size() != 2 || im.size() != 2 || res.size() != 2) throw ConfigError("re, im and resolution take two values");
    json summary = json::object();
    for (const auto& entry : cp_list(cfg, {"o2cp", "bdf2"})) {
        const TwoStepScheme ts = two_step_entry(entry);
        json js = json::object();
        for (auto kind : {ContourKind::GammaE, ContourKind::KappaE}) {
            const std::string tag = kind == ContourKind::GammaE ? "gamma_e" : "kappa_e";
            const auto map = contour_map(kind, ts, {re[0], re[1]}, {im[0], im[1]}, res[0], res[1], nc, g.threads);
            std::vector<std::string> header{"im"};
            for (double x : map.re) header.push_back("re=" + io::format_double(x));
            io::CsvWriter w(out / ("contour_" + tag + "_" + ts.name + ".csv"), header);
            int sentinel = 0, axis_sentinel = 0, axis_above_one = 0;
            for (std::size_t i = 0; i < map.im.size(); ++i) {
                std::vector<double> row{map.im[i]};
                for (std::size_t j = 0; j < map.re.size(); ++j) {
                    const double v = map.values[i][j];
                    row.push_back(v);
                    if (std::isinf(v)) ++sentinel;
                    if (map.re[j] == 0.0) {
                        if (std::isinf(v)) ++axis_sentinel;
                        if (v > 1.0) ++axis_above_one;
                    }
                }
                w.row(row);
            }
            js[tag] = {{"sentinel_count", sentinel},
                       {"imaginary_axis_sentinel_count", axis_sentinel},
                       {"imaginary_axis_above_one", axis_above_one}};
        }
        summary[ts.name] = js;
    }
    io::write_json(out / "contour.json", summary);
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_jorder(const Globals& g) {
    const json cfg = load_config(g);
    const fs::path out = prepare_out(g);
    const TwoStepScheme ts = two_step_entry(opt<std::string>(cfg, "cp", "o2cp"));
    const auto fps = opt<std::vector<std::string>>(cfg, "fp", {"radau_iia_2", "lobatto_iiic_3", "radau_iia_3"});
    const auto j_list = opt<std::vector<int>>(cfg, "J", {10, 20, 40, 80});
    io::CsvWriter w(out / ("jorder_" + ts.name + ".csv"), {"fp", "J", "gamma_star", "sup_gap", "uniform_gap"});
    json summary{{"cp", ts.name}, {"J", j_list}, {"fp", json::object()}};
    for (const auto& fp : fps) {
        const auto study = j_order_study(single_step(fp).stability, ts, j_list, SpectralGrid::default_grid(), g.threads);
        for (const auto& row : study.rows)
            w.raw_row({fp, std::to_string(row.J), io::format_double(row.gamma_star), io::format_double(row.sup_gap),
                       io::format_double(row.uniform_gap)});
        summary["fp"][fp] = {{"gamma_e_star", study.gamma_e_star},
                             {"slope", study.slope},
                             {"sup_slope", study.sup_slope},
                             {"order", single_step(fp).order}};
    }
    io::write_json(out / ("jorder_" + ts.name + ".json"), summary);
    std::cout << summary.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-step parareal laboratory"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "JSON experiment config");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--seed", g.seed, "random seed (overrides the config)");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--profile", g.profile, "paper (n=1000) or test (n=200)")->check(CLI::IsMember({"paper", "test"}));
    app.add_flag("--no-timing", g.no_timing, "write zero for wall-clock fields");

    std::map<std::string, int (*)(const Globals&)> commands{
        {"analyze", cmd_analyze},     {"optimize", cmd_optimize}, {"linear", cmd_linear}, {"nonlinear", cmd_nonlinear},
        {"stability", cmd_stability}, {"contour", cmd_contour},   {"jorder", cmd_jorder}};
    std::map<std::string, std::string> help{
        {"analyze", "convergence-factor curves and sups"},
        {"optimize", "barrier-method search for a two-step coarse propagator"},
        {"linear", "linear heat equation experiment (cases i, ii, iii)"},
        {"nonlinear", "semilinear experiment for c_L in {1, 5, 10}"},
        {"stability", "boundary locus and A-stability check"},
        {"contour", "gamma_e and kappa_e over complex s"},
        {"jorder", "dependence of gamma* on J for several fine propagators"}};
    for (const auto& [name, fn] : commands) app.add_subcommand(name, help[name]);

    CLI11_PARSE(app, argc, argv);
    try {
        for (const auto& [name, fn] : commands)
            if (app.got_subcommand(name)) return fn(g);
    } catch (const parareal::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
