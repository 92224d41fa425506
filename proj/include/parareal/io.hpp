#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parareal/errors.hpp"
#include "parareal/optimizer.hpp"
#include "parareal/parareal.hpp"
#include "parareal/propagators.hpp"

namespace parareal::io {

using nlohmann::json;

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// JSON number, or null for non-finite values.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw Error("cannot open " + path.string() + " for writing");
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
        columns_ = header.size();
    }

    void row(const std::vector<double>& values) {
        if (values.size() != columns_) throw DimensionMismatch("csv row has wrong number of columns");
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_double(values[i]);
        out_ << '\n';
    }

    void raw_row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw DimensionMismatch("csv row has wrong number of columns");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
    std::size_t columns_ = 0;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// scheme files

inline json to_json(const ThetaParams& th) {
    return {{"a1", th.a1}, {"a2", th.a2}, {"b1", th.b1}, {"c2", th.c2}};
}

inline ThetaParams theta_from_json(const json& j) {
    try {
        return {j.at("a1").get<double>(), j.at("a2").get<double>(), j.at("b1").get<double>(), j.at("c2").get<double>()};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("theta: ") + e.what());
    }
}

/// Two-step scheme file. When theta is given it is stored too and takes precedence on reading,
/// so a scheme written by the optimizer reloads bit-for-bit.
inline json scheme_to_json(const TwoStepScheme& ts, const std::optional<ThetaParams>& theta = std::nullopt) {
    json j{{"type", "two_step"},
           {"name", ts.name},
           {"alpha", {ts.alpha[0], ts.alpha[1], ts.alpha[2]}},
           {"beta", {ts.beta[0], ts.beta[1], ts.beta[2]}}};
    if (theta) j["theta"] = to_json(*theta);
    return j;
}

inline json scheme_to_json(const SingleStepScheme& s) {
    json j{{"type", "single_step"},
           {"name", s.name},
           {"order", s.order},
           {"source_rule", s.source_rule == SourceRule::StiffConsistent ? "stiff_consistent" : "tableau"},
           {"stability", {{"num", s.stability.num().coeffs()}, {"den", s.stability.den().coeffs()}}}};
    if (s.tableau) j["tableau"] = {{"a", s.tableau->a}, {"b", s.tableau->b}, {"c", s.tableau->c}, {"order", s.tableau->order}};
    return j;
}

inline Scheme scheme_from_json(const json& j) {
    try {
        const std::string type = j.at("type").get<std::string>();
        const std::string name = j.value("name", std::string("custom"));
        if (type == "two_step") {
            if (j.contains("theta")) return two_step_from_theta(theta_from_json(j.at("theta")), name);
            const auto a = j.at("alpha").get<std::vector<double>>();
            const auto b = j.at("beta").get<std::vector<double>>();
            if (a.size() != 3 || b.size() != 3) throw ConfigError("two-step scheme needs three alpha and beta values");
            return make_two_step(name, {a[0], a[1], a[2]}, {b[0], b[1], b[2]});
        }
        if (type == "single_step") {
            if (j.contains("tableau")) {
                const auto& t = j.at("tableau");
                ButcherTableau tab{t.at("a").get<std::vector<std::vector<double>>>(), t.at("b").get<std::vector<double>>(),
                                   t.at("c").get<std::vector<double>>(), t.value("order", 0)};
                return single_step_from_tableau(name, std::move(tab));
            }
            SingleStepScheme s;
            s.name = name;
            s.stability = RationalFunction(Polynomial(j.at("stability").at("num").get<std::vector<double>>()),
                                           Polynomial(j.at("stability").at("den").get<std::vector<double>>()));
            s.source_rule = SourceRule::StiffConsistent;
            s.order = j.value("order", 0);
            return s;
        }
        throw ConfigError("unknown scheme type '" + type + "'");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scheme file: ") + e.what());
    }
}

inline Scheme load_scheme_file(const std::filesystem::path& path) { return scheme_from_json(read_json(path)); }

// ---------------------------------------------------------------------------
// traces

inline void write_trace_csv(const std::filesystem::path& path, const IterationTrace& trace, bool with_timing = true) {
    CsvWriter w(path, {"k", "error", "cp_cost", "fp_cost"});
    for (const auto& r : trace.iterations)
        w.row({static_cast<double>(r.k), r.error, with_timing ? r.cp_cost : 0.0, with_timing ? r.fp_cost : 0.0});
}

inline void write_optimizer_trace_csv(const std::filesystem::path& path, const OptimizerTrace& trace) {
    CsvWriter w(path, {"outer", "inner", "mu", "a1", "a2", "b1", "c2", "loss_s", "loss_b", "loss_mu", "grad_norm"});
    for (const auto& s : trace.steps)
        w.row({static_cast<double>(s.outer), static_cast<double>(s.inner), s.mu, s.theta.a1, s.theta.a2, s.theta.b1,
               s.theta.c2, s.loss_s, s.loss_b, s.loss_mu, s.grad_norm});
}

inline void write_state_csv(const std::filesystem::path& path, const StateVector& v) {
    CsvWriter w(path, {"node", "value"});
    for (std::size_t i = 0; i < v.size(); ++i) w.row({static_cast<double>(i + 1), v[i]});
}

} // namespace parareal::io
