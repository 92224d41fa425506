#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "parareal/errors.hpp"
#include "parareal/fem.hpp"

namespace parareal {

/// Heat equation u_t - u_xx = f(u, t) on (0,1) with zero Dirichlet data, discretized in space.
struct Problem {
    std::string name;
    double T = 0.0;
    FemSystem sys;
    StateVector u0;
    std::function<double(double, double)> exact;  ///< empty when no closed form is known
};

enum class LinearCase { I, II, III };

/// Source used for the linear cases.
enum class SourceForm {
    Printed,      ///< sin(pi x)(-pi sin(pi t) + pi^2 sin(pi x) cos(pi t)), as stated with the problem data
    Manufactured  ///< sin(pi x)(-pi sin(pi t) + pi^2 cos(pi t)), exact solution sin(pi x) cos(pi t)
};

inline LinearCase parse_linear_case(std::string_view s) {
    if (s == "i") return LinearCase::I;
    if (s == "ii") return LinearCase::II;
    if (s == "iii") return LinearCase::III;
    throw ConfigError("unknown linear case '" + std::string(s) + "' (expected i, ii or iii)");
}

inline std::string to_string(LinearCase c) {
    switch (c) {
    case LinearCase::I: return "i";
    case LinearCase::II: return "ii";
    case LinearCase::III: return "iii";
    }
    return "?";
}

inline SourceForm parse_source_form(std::string_view s) {
    if (s == "printed") return SourceForm::Printed;
    if (s == "manufactured") return SourceForm::Manufactured;
    throw ConfigError("unknown source form '" + std::string(s) + "'");
}

inline Problem make_linear_problem(LinearCase c, int n_cells, SourceForm form = SourceForm::Printed) {
    using std::numbers::pi;
    Problem p;
    p.name = "linear-" + to_string(c);
    p.T = c == LinearCase::III ? 1.0 : 10.0;
    p.sys = assemble(Mesh1D::uniform(n_cells));
    auto s1 = [](double x) { return std::sin(pi * x); };
    if (form == SourceForm::Printed) {
        p.sys.add_source_term(s1, [](double t) { return -pi * std::sin(pi * t); });
        p.sys.add_source_term([](double x) { return std::pow(std::sin(pi * x), 2); },
                              [](double t) { return pi * pi * std::cos(pi * t); });
    } else {
        p.sys.add_source_term(s1, [](double t) { return -pi * std::sin(pi * t) + pi * pi * std::cos(pi * t); });
    }
    if (c == LinearCase::I) {
        p.u0 = p.sys.interpolate([](double x) { return x < 0.5 ? 1.0 : 0.0; });
    } else {
        p.u0 = p.sys.interpolate(s1);
        if (form == SourceForm::Manufactured)
            p.exact = [](double x, double t) { return std::sin(pi * x) * std::cos(pi * t); };
    }
    return p;
}

/// u_t = u_xx + c_L u (1 - u^2) + g on (0, 10), g chosen so that u = sin(pi x) cos(pi t).
inline Problem make_semilinear_problem(double c_l, int n_cells, double T = 10.0) {
    using std::numbers::pi;
    if (!(c_l > 0.0)) throw ConfigError("c_L must be positive");
    Problem p;
    p.name = "semilinear";
    p.T = T;
    p.sys = assemble(Mesh1D::uniform(n_cells));
    // g = sin(pi x)(-pi sin pi t + pi^2 cos pi t - c_L cos pi t) + c_L sin^3(pi x) cos^3(pi t)
    p.sys.add_source_term([](double x) { return std::sin(pi * x); },
                          [c_l](double t) { return -pi * std::sin(pi * t) + (pi * pi - c_l) * std::cos(pi * t); });
    p.sys.add_source_term([](double x) { return std::pow(std::sin(pi * x), 3); },
                          [c_l](double t) { return c_l * std::pow(std::cos(pi * t), 3); });
    p.sys.set_reaction({[c_l](double u) { return c_l * u * (1.0 - u * u); },
                        [c_l](double u) { return c_l * (1.0 - 3.0 * u * u); }});
    p.u0 = p.sys.interpolate([](double x) { return std::sin(pi * x); });
    p.exact = [](double x, double t) { return std::sin(pi * x) * std::cos(pi * t); };
    return p;
}

} // namespace parareal
