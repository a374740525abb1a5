#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <fstream>

#include "geophase/charged_atom.hpp"
#include "geophase/scenario.hpp"
#include "geophase/sweep.hpp"
#include "support.hpp"

using namespace geophase;
using namespace geophase::io;
using geophase::testing::Rng;

namespace {

json pythagorean_doc() {
    return json::parse(R"({
        "kind": "neutral_rotating",
        "params": {"omega_B": 3, "omega": 4, "theta_B_deg": 90, "spin": "1/2"},
        "initial_state": {"m_s": 0.5}
    })");
}

json paper_point_doc() {
    return json::parse(R"({
        "kind": "charged_rotating",
        "params": {"omega_B": 1.224744871391589, "omega": 1, "theta_B": 0.9117382909684877, "l": 1, "spin": "1/2"},
        "initial_state": {"m": 1, "m_s": 0.5}
    })");
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("geophase_io_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("numbers round-trip through 17 significant digits") {
    Rng rng(41);
    std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
    std::uniform_int_distribution<int> exponent(-300, 300);
    for (int trial = 0; trial < 2000; ++trial) {
        const double x = std::ldexp(mantissa(rng), exponent(rng));
        const std::string s = format_number(x);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == x);
    }
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_optional(std::nullopt).empty());
}

TEST_CASE("scenario parsing") {
    const Scenario sc = parse_scenario(pythagorean_doc());
    CHECK(sc.kind == ScenarioKind::neutral_rotating);
    CHECK(sc.neutral.theta_B == doctest::Approx(pi / 2).epsilon(1e-15));
    CHECK(sc.neutral.spin.two_s() == 1);
    CHECK(sc.neutral.mu_sign == 1);
    CHECK(*sc.initial.m_s == 0.5);

    json amp = pythagorean_doc();
    amp["initial_state"] = json::parse(R"({"amplitudes": [[3, 0], [0, 4]]})");
    const Scenario a = parse_scenario(amp);
    REQUIRE(a.initial.amplitudes);
    CHECK(std::abs((*a.initial.amplitudes)(1) - Complex(0.0, 0.8)) < 1e-15);
    CHECK(a.warnings.size() == 1);

    amp["initial_state"] = json::parse(R"({"amplitudes": [0.6, 0.8]})");
    CHECK(parse_scenario(amp).warnings.empty());

    const auto rejects = [](const char* patch) {
        json doc = pythagorean_doc();
        doc.merge_patch(json::parse(patch));
        CAPTURE(patch);
        CHECK_THROWS_AS(parse_scenario(doc), SchemaError);
    };
    rejects(R"({"kind": "neutral"})");
    rejects(R"({"extra": 1})");
    rejects(R"({"params": {"omega": -1}})");
    rejects(R"({"params": {"omega_B": "fast"}})");
    rejects(R"({"params": {"theta_B": 1.0}})");  // both theta_B and theta_B_deg
    rejects(R"({"params": {"spin": "2/3"}})");
    rejects(R"({"params": {"spin": 0}})");
    rejects(R"({"params": {"mu_sign": 2}})");
    rejects(R"({"params": {"colour": 2}})");
    rejects(R"({"initial_state": {"m_s": 1.5}})");
    rejects(R"({"initial_state": {"m_s": null, "amplitudes": [1, 0, 0]}})");
    rejects(R"({"initial_state": {"m_s": null, "amplitudes": [0, 0]}})");
    rejects(R"({"initial_state": {"m": 1}})");
    rejects(R"({"initial_state": {"axis": [0, 0, 1]}})");
    rejects(R"({"grid": {"dt": 0}})");
    rejects(R"({"grid": {"horizon": 1, "periods": 2}})");
    rejects(R"({"tolerances": {"fidelity": -1}})");

    json charged = paper_point_doc();
    charged["initial_state"].erase("m");
    CHECK_THROWS_AS(parse_scenario(charged), SchemaError);
    CHECK_NOTHROW(parse_scenario(paper_point_doc()));
}

TEST_CASE("neutral rotating scenario at the Pythagorean point") {
    const RunArtifacts out = run_scenario(parse_scenario(pythagorean_doc()));
    CHECK(out.report["cyclic"]["K"] == 4);
    CHECK(out.report["cyclic"]["K_S"] == 5);
    const double gamma = out.report["phases"]["gamma"].get<double>();
    const double omega_v = out.report["phases"]["omega_v"].get<double>();
    // omega_S = 5, cos(theta_S) = 4/5: one eigenstate cycle covers K = 4 cones.
    CHECK(phase_distance(gamma, -0.5 * 4 * two_pi * (1.0 - 0.8)) < 1e-9);
    CHECK(phase_distance(gamma, -0.5 * omega_v) < 1e-9);
    CHECK(out.report["oracle"]["gamma_residual"].get<double>() < 1e-5);
    CHECK(out.report["phases"]["cyclic_fidelity"].get<double>() > 1.0 - 1e-6);
    CHECK(out.trajectory_csv.rfind("t,vx,vy,vz\n", 0) == 0);
    CHECK(out.phases_csv.rfind("delta,beta,gamma,omega_u,omega_v,fidelity\n", 0) == 0);

    // Same inputs, same bytes.
    const RunArtifacts again = run_scenario(parse_scenario(pythagorean_doc()));
    CHECK(again.report.dump() == out.report.dump());
    CHECK(again.trajectory_csv == out.trajectory_csv);
    CHECK(again.phases_csv == out.phases_csv);
}

TEST_CASE("charged rotating scenario at the worked point") {
    const RunArtifacts out = run_scenario(parse_scenario(paper_point_doc()));
    CHECK(phase_distance(out.report["phases"]["gamma"].get<double>(), 0.75 * pi) < 1e-9);
    CHECK(out.report["cyclic"]["K_S"] == 2);
    CHECK(out.trajectory_csv.rfind("t,vx,vy,vz,ux,uy,uz\n", 0) == 0);
    const std::string first_row = out.trajectory_csv.substr(20, out.trajectory_csv.find('\n', 20) - 20);
    CHECK(first_row.rfind("0,", 0) == 0);
}

TEST_CASE("runs that cannot be certified are refused") {
    json nc = pythagorean_doc();
    nc["params"]["omega"] = 4.0000123;
    CHECK_THROWS_AS(run_scenario(parse_scenario(nc)), NotCyclicError);

    Scenario tight = parse_scenario(paper_point_doc());
    apply_overrides(tight, {std::nullopt, std::nullopt, 1e-10});
    CHECK_THROWS_AS(run_scenario(tight), TrustFailure);

    // A coarse oracle step is caught by the residual, not silently reported.
    Scenario coarse = parse_scenario(paper_point_doc());
    apply_overrides(coarse, {0.05, std::nullopt, std::nullopt});
    CHECK_THROWS_AS(run_scenario(coarse), TrustFailure);
}

TEST_CASE("sampled waveform file reproduces the rotating field") {
    const auto dir = scratch_dir("samples");
    const double rate = 3.0;
    const double omega = 4.0;
    const double theta = pi / 2;
    {
        std::ofstream f(dir / "field.csv");
        f << "t,rate,nx,ny,nz\n";
        const int n = 20000;
        const double T = two_pi / omega;
        for (int k = 0; k <= n; ++k) {
            const double t = T * k / n;
            f << format_number(t) << "," << rate << "," << format_number(std::sin(theta) * std::cos(omega * t)) << ","
              << format_number(std::sin(theta) * std::sin(omega * t)) << "," << format_number(std::cos(theta)) << "\n";
        }
    }
    const json doc = json::parse(R"({
        "kind": "neutral_general",
        "params": {"spin": "1/2", "field": {"type": "samples", "file": "field.csv", "period": 1.5707963267948966}},
        "initial_state": {"m_s": 0.5, "axis": [0.6, 0, 0.8]}
    })");
    const RunArtifacts out = run_scenario(parse_scenario(doc, dir));
    // Eigenstate along n_S = (3, 0, 4)/5 over one field period: K = 1 cone of
    // half-angle theta_S about z.
    CHECK(phase_distance(out.report["phases"]["gamma"].get<double>(), -0.5 * two_pi * (1.0 - 0.8)) < 1e-6);

    json missing = doc;
    missing["params"]["field"]["file"] = "nope.csv";
    CHECK_THROWS_AS(parse_scenario(missing, dir), SchemaError);

    // Horizon beyond the sampled span is an input error.
    json long_run = doc;
    long_run["grid"] = json::parse(R"({"periods": 2})");
    CHECK_THROWS_AS(run_scenario(parse_scenario(long_run, dir)), std::out_of_range);
}

TEST_CASE("general scenarios with periodic axes") {
    const json doc = json::parse(R"({
        "kind": "neutral_general",
        "params": {"spin": 1, "field": {"type": "oscillating", "amplitude": 2.2, "omega": 1, "theta_B": 0.9}},
        "initial_state": {"m_s": 0, "axis": "periodic"}
    })");
    const RunArtifacts out = run_scenario(parse_scenario(doc));
    CHECK(out.report["phases"]["gamma"].get<double>() == 0.0);
    CHECK(out.report["phases"]["omega_v"].is_null());
    CHECK(out.phases_csv.find(",,,") != std::string::npos);  // omega_u and omega_v both empty

    // Off the cyclic grid the closed form has no period, but one field period
    // still closes on the rotating-frame dual axes.
    const json charged = json::parse(R"({
        "kind": "charged_general",
        "params": {"l": 1, "spin": "1/2", "field": {"type": "rotating", "rate": 3, "omega": 4, "theta_B": 1.5707963267948966}},
        "initial_state": {"m": 1, "m_s": 0.5, "orbital_axis": "periodic", "spin_axis": "periodic"}
    })");
    const RunArtifacts c = run_scenario(parse_scenario(charged));
    ChargedParams p;
    p.omega_B = 3;
    p.omega = 4;
    p.theta_B = pi / 2;
    p.spin = SpinQuantum(1);
    const DualFrame f = dual_frames(p);
    const auto axis = [&](const char* key) {
        const auto& a = c.report["axes"][key];
        return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    };
    CHECK(std::abs(std::abs(axis("d0").dot(f.orbital.axis.vec())) - 1.0) < 1e-9);
    CHECK(std::abs(std::abs(axis("e0").dot(f.spin.axis.vec())) - 1.0) < 1e-9);
    CHECK(c.report["oracle"]["gamma_residual"].get<double>() < 1e-5);
}

TEST_CASE("write_outputs leaves nothing behind on failure") {
    const auto dir = scratch_dir("outputs");
    write_outputs(dir, {{"a.txt", "one\n"}, {"b.txt", "two\n"}});
    CHECK(std::filesystem::exists(dir / "a.txt"));
    CHECK(std::filesystem::exists(dir / "b.txt"));
    CHECK_FALSE(std::filesystem::exists(dir / "a.txt.partial"));
    std::filesystem::create_directories(dir / "blocked.txt.partial");
    CHECK_THROWS(write_outputs(dir, {{"c.txt", "three\n"}, {"blocked.txt", "four\n"}}));
    CHECK_FALSE(std::filesystem::exists(dir / "c.txt"));
    CHECK_FALSE(std::filesystem::exists(dir / "c.txt.partial"));
}

TEST_CASE("charged sweep agrees with the algebraic solution") {
    // With omega = 1: a^2 = x^2 - 2 x c + 1 and b^2 = 4 x^2 - 4 x c + 1, so
    // x^2 = (b^2 - 2 a^2 + 1) / 2 and c = (x^2 + 1 - a^2) / (2 x).
    const std::vector<std::pair<double, double>> targets = {{1.0, 2.0}, {0.5, 1.5}, {2.0, 3.5}, {1.5, 2.5}, {0.75, 1.25}};
    for (const auto& [a, b] : targets) {
        CAPTURE(a);
        CAPTURE(b);
        SweepConfig c;
        c.x_min = 0.05;
        c.x_max = 4.0;
        c.target_l = a;
        c.target_s = b;
        c.x_cells = 150;
        c.theta_cells = 150;
        const auto points = sweep(c);
        const double x2 = (b * b - 2 * a * a + 1) / 2;
        std::optional<std::pair<double, double>> expected;
        if (x2 > 0) {
            const double x = std::sqrt(x2);
            const double cth = (x2 + 1 - a * a) / (2 * x);
            if (std::abs(cth) <= 1 && x >= c.x_min && x <= c.x_max) expected = {{x, std::acos(cth)}};
        }
        if (expected) {
            REQUIRE(points.size() == 1);
            CHECK(points[0].omega_B_over_omega == doctest::Approx(expected->first).epsilon(1e-9));
            CHECK(points[0].theta_B == doctest::Approx(expected->second).epsilon(1e-9));
            CHECK(std::abs(*points[0].kl_over_k - a) < 1e-9);
            CHECK(std::abs(points[0].ks_over_k - b) < 1e-9);
        } else {
            CHECK(points.empty());
        }
    }
}

TEST_CASE("neutral sweep traces the constant-rate curve") {
    const SweepConfig c = parse_sweep_config(json::parse(R"({
        "kind": "neutral", "omega_B_over_omega": [0.05, 3], "theta_B_deg": [0, 180],
        "targets": {"KS_over_K": "5/4"}, "grid": [300, 8]
    })"));
    const auto points = sweep(c);
    REQUIRE(points.size() == 9);
    bool pythagorean = false;
    for (const auto& p : points) {
        const double x = p.omega_B_over_omega;
        CHECK(x * x + 1 + 2 * x * std::cos(p.theta_B) == doctest::Approx(25.0 / 16.0).epsilon(1e-9));
        CHECK_FALSE(p.kl_over_k.has_value());
        if (std::abs(p.theta_B - pi / 2) < 1e-12) {
            pythagorean = true;
            CHECK(x == doctest::Approx(0.75).epsilon(1e-12));
        }
    }
    CHECK(pythagorean);
    CHECK(sweep_csv(points) == sweep_csv(sweep(c)));

    SweepConfig infeasible = c;
    infeasible.target_s = 0.5;
    infeasible.x_min = 0.1;
    infeasible.x_max = 0.3;
    infeasible.theta_max = 1.0;
    CHECK(sweep(infeasible).empty());
    CHECK(sweep_csv({}) == "omega_B_over_omega,theta_B,KL_over_K,KS_over_K\n");
}

TEST_CASE("sweep config validation") {
    const auto rejects = [](const char* text) {
        CAPTURE(text);
        CHECK_THROWS_AS(parse_sweep_config(json::parse(text)), SchemaError);
    };
    rejects(R"({"targets": {"KS_over_K": 1}})");
    rejects(R"({"kind": "charged", "targets": {"KS_over_K": 1}})");
    rejects(R"({"kind": "neutral", "targets": {"KS_over_K": 1, "KL_over_K": 1}})");
    rejects(R"({"kind": "neutral", "targets": {"KS_over_K": "x"}})");
    rejects(R"({"kind": "neutral", "targets": {"KS_over_K": 1}, "theta_B": [0, 4]})");
    rejects(R"({"kind": "neutral", "targets": {"KS_over_K": 1}, "omega_B_over_omega": [2, 1]})");
    rejects(R"({"kind": "neutral", "targets": {"KS_over_K": 1}, "grid": [0, 5]})");
    rejects(R"({"kind": "neutral", "targets": {"KS_over_K": 1}, "speed": 5})");
}
