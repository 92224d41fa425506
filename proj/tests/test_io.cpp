#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "parareal/analysis.hpp"
#include "parareal/io.hpp"

using namespace parareal;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const auto dir = fs::temp_directory_path() / ("parareal_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST(FormatDouble, RoundTripsAndSpecialValues) {
    const double v = 0.1 + 0.2;
    EXPECT_EQ(std::stod(io::format_double(v)), v);
    EXPECT_EQ(io::format_double(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(io::format_double(std::nan("")), "nan");
    EXPECT_TRUE(io::number(std::nan("")).is_null());
}

TEST(SchemeJson, TwoStepWithThetaReloadsExactly) {
    const ThetaParams th{0.03, -0.001, -0.6, -0.45};
    const auto ts = two_step_from_theta(th, "opt");
    const auto j = io::scheme_to_json(ts, th);
    const auto back = std::get<TwoStepScheme>(io::scheme_from_json(nlohmann::json::parse(j.dump())));
    EXPECT_EQ(back.alpha, ts.alpha);
    EXPECT_EQ(back.beta, ts.beta);
    EXPECT_EQ(back.name, "opt");
    const auto grid = SpectralGrid::default_grid();
    const double a = sup_over_grid([&](double s) { return gamma_e(ts, s); }, grid).sup;
    const double b = sup_over_grid([&](double s) { return gamma_e(back, s); }, grid).sup;
    EXPECT_NEAR(a, b, 1e-10);
}

TEST(SchemeJson, TwoStepFromCoefficients) {
    const auto bdf2 = two_step("bdf2");
    const auto back = std::get<TwoStepScheme>(io::scheme_from_json(io::scheme_to_json(bdf2)));
    for (int i = 0; i < 3; ++i) {
        EXPECT_DOUBLE_EQ(back.alpha[i], bdf2.alpha[i]);
        EXPECT_DOUBLE_EQ(back.beta[i], bdf2.beta[i]);
    }
}

TEST(SchemeJson, SingleStepRoundTrip) {
    for (const char* name : {"ocp", "radau_iia_3", "sdirk2"}) {
        const auto s = single_step(name);
        const auto back = std::get<SingleStepScheme>(io::scheme_from_json(io::scheme_to_json(s)));
        EXPECT_EQ(back.source_rule, s.source_rule) << name;
        for (double x : {0.1, 1.0, 10.0}) EXPECT_NEAR(back.stability(x), s.stability(x), 1e-14) << name;
    }
}

TEST(SchemeJson, Errors) {
    EXPECT_THROW(io::scheme_from_json(nlohmann::json{{"type", "three_step"}}), ConfigError);
    EXPECT_THROW(io::scheme_from_json(nlohmann::json{{"type", "two_step"}, {"alpha", {1, 2}}, {"beta", {0, 0, 1}}}),
                 ConfigError);
    EXPECT_THROW(io::read_json("/nonexistent/file.json"), ConfigError);
}

TEST(SchemeJson, FileRoundTrip) {
    const auto dir = temp_dir();
    io::write_json(dir / "s.json", io::scheme_to_json(two_step("o2cp"), o2cp_theta()));
    const auto back = std::get<TwoStepScheme>(io::load_scheme_file(dir / "s.json"));
    EXPECT_NEAR(back.beta[2], 0.56380, 1e-15);
    fs::remove_all(dir);
}

TEST(TraceCsv, HeaderAndTimingSwitch) {
    IterationTrace t;
    t.iterations.push_back({0, 1.0, 0.0, 0.0, 0.0, {}});
    t.iterations.push_back({1, 0.25, 0.5, 0.75, 0.1, {}});
    const auto dir = temp_dir();
    io::write_trace_csv(dir / "a.csv", t, true);
    io::write_trace_csv(dir / "b.csv", t, false);
    EXPECT_EQ(slurp(dir / "a.csv"), "k,error,cp_cost,fp_cost\n0,1,0,0\n1,0.25,0.5,0.75\n");
    EXPECT_EQ(slurp(dir / "b.csv"), "k,error,cp_cost,fp_cost\n0,1,0,0\n1,0.25,0,0\n");
    fs::remove_all(dir);
}

TEST(Csv, RowWidthChecked) {
    const auto dir = temp_dir();
    io::CsvWriter w(dir / "c.csv", {"a", "b"});
    EXPECT_THROW(w.row({1.0}), DimensionMismatch);
    fs::remove_all(dir);
}
