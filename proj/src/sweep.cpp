#include "geophase/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <thread>

namespace geophase::io {

namespace {

struct Rates {
    double l = 0.0;  // omega_L / omega (charged only)
    double s = 0.0;  // omega_S / omega
};

Rates rates_at(const SweepConfig& c, double x, double theta) {
    if (c.charged) {
        ChargedParams p;
        p.omega = 1.0;
        p.omega_B = x;
        p.theta_B = theta;
        const DualFrame f = dual_frames(p);
        return {f.orbital.rate, f.spin.rate};
    }
    RotatingFieldParams p;
    p.omega = 1.0;
    p.omega_B = x;
    p.theta_B = theta;
    p.mu_sign = c.mu_sign;
    return {0.0, effective_frame(p).rate};
}

double grid_point(double lo, double hi, int cells, int k) {
    if (k == cells) return hi;
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(cells);
}

double bisect(const std::function<double(double)>& f, double a, double b, double fa) {
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (fa < 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

// All sign changes of f on a uniform grid, each refined by bisection.
std::vector<double> roots_on_grid(const std::function<double(double)>& f, double lo, double hi, int cells) {
    std::vector<double> values(static_cast<std::size_t>(cells) + 1);
    for (int k = 0; k <= cells; ++k) values[static_cast<std::size_t>(k)] = f(grid_point(lo, hi, cells, k));
    std::vector<double> roots;
    for (int k = 0; k <= cells; ++k) {
        const double fk = values[static_cast<std::size_t>(k)];
        if (fk == 0.0) {
            roots.push_back(grid_point(lo, hi, cells, k));
            continue;
        }
        if (k == cells) break;
        const double fn = values[static_cast<std::size_t>(k) + 1];
        if (fn != 0.0 && (fk < 0.0) != (fn < 0.0)) {
            roots.push_back(bisect(f, grid_point(lo, hi, cells, k), grid_point(lo, hi, cells, k + 1), fk));
        }
    }
    return roots;
}

// Runs work(i) for i in [0, n) on a few threads; results keep index order.
template <typename T>
std::vector<T> parallel_map(int n, const std::function<T(int)>& work) {
    const int threads = std::max(1, std::min<int>(n, static_cast<int>(std::thread::hardware_concurrency())));
    std::vector<std::future<std::vector<T>>> futures;
    for (int t = 0; t < threads; ++t) {
        futures.push_back(std::async(std::launch::async, [=, &work] {
            std::vector<T> part;
            for (int i = t; i < n; i += threads) part.push_back(work(i));
            return part;
        }));
    }
    std::vector<std::vector<T>> parts;
    for (auto& f : futures) parts.push_back(f.get());
    std::vector<T> out(static_cast<std::size_t>(n));
    for (int t = 0; t < threads; ++t) {
        for (std::size_t j = 0; j < parts[static_cast<std::size_t>(t)].size(); ++j) {
            out[static_cast<std::size_t>(t) + j * static_cast<std::size_t>(threads)] =
                std::move(parts[static_cast<std::size_t>(t)][j]);
        }
    }
    return out;
}

// theta_B values at which omega_L/omega hits its target for a fixed x.
std::vector<double> theta_roots(const SweepConfig& c, double x) {
    return roots_on_grid([&](double th) { return rates_at(c, x, th).l - c.target_l; }, c.theta_min, c.theta_max,
                         c.theta_cells);
}

bool meets_targets(const SweepConfig& c, const SweepPoint& p) {
    const Rates r = rates_at(c, p.omega_B_over_omega, p.theta_B);
    if (std::abs(r.s - c.target_s) > c.tolerance) return false;
    return !c.charged || std::abs(r.l - c.target_l) <= c.tolerance;
}

SweepPoint make_point(const SweepConfig& c, double x, double theta) {
    const Rates r = rates_at(c, x, theta);
    SweepPoint p{x, theta, std::nullopt, r.s};
    if (c.charged) p.kl_over_k = r.l;
    return p;
}

std::vector<SweepPoint> sweep_charged(const SweepConfig& c) {
    // Nested search: along each x line the orbital target fixes theta (branch
    // j = j-th root); the spin mismatch along that branch is then bisected in x.
    struct Line {
        std::vector<double> theta;
        std::vector<double> mismatch;
    };
    const std::function<Line(int)> scan_line = [&](int k) {
        const double x = grid_point(c.x_min, c.x_max, c.x_cells, k);
        Line line;
        line.theta = theta_roots(c, x);
        for (double th : line.theta) line.mismatch.push_back(rates_at(c, x, th).s - c.target_s);
        return line;
    };
    const std::vector<Line> lines = parallel_map<Line>(c.x_cells + 1, scan_line);

    const std::function<std::vector<SweepPoint>(int)> refine_cell = [&](int k) {
        std::vector<SweepPoint> found;
        const Line& a = lines[static_cast<std::size_t>(k)];
        const Line& b = lines[static_cast<std::size_t>(k) + 1];
        if (a.theta.size() != b.theta.size()) return found;
        const double xa = grid_point(c.x_min, c.x_max, c.x_cells, k);
        const double xb = grid_point(c.x_min, c.x_max, c.x_cells, k + 1);
        for (std::size_t j = 0; j < a.theta.size(); ++j) {
            const double fa = a.mismatch[j];
            const double fb = b.mismatch[j];
            if (fa == 0.0) {
                found.push_back(make_point(c, xa, a.theta[j]));
                continue;
            }
            if (fb == 0.0 || (fa < 0.0) == (fb < 0.0)) continue;
            bool lost_branch = false;
            const auto g = [&](double x) {
                const auto roots = theta_roots(c, x);
                if (roots.size() != a.theta.size()) {
                    lost_branch = true;
                    return fa;
                }
                return rates_at(c, x, roots[j]).s - c.target_s;
            };
            const double x = bisect(g, xa, xb, fa);
            const auto roots = theta_roots(c, x);
            if (lost_branch || roots.size() != a.theta.size()) continue;
            found.push_back(make_point(c, x, roots[j]));
        }
        return found;
    };
    std::vector<SweepPoint> out;
    for (auto& cell : parallel_map<std::vector<SweepPoint>>(c.x_cells, refine_cell)) {
        for (auto& p : cell) out.push_back(p);
    }
    return out;
}

std::vector<SweepPoint> sweep_neutral(const SweepConfig& c) {
    const std::function<std::vector<SweepPoint>(int)> row = [&](int k) {
        const double theta = grid_point(c.theta_min, c.theta_max, c.theta_cells, k);
        std::vector<SweepPoint> found;
        const auto f = [&](double x) { return rates_at(c, x, theta).s - c.target_s; };
        for (double x : roots_on_grid(f, c.x_min, c.x_max, c.x_cells)) found.push_back(make_point(c, x, theta));
        return found;
    };
    std::vector<SweepPoint> out;
    for (auto& r : parallel_map<std::vector<SweepPoint>>(c.theta_cells + 1, row)) {
        for (auto& p : r) out.push_back(p);
    }
    return out;
}

std::pair<double, double> range(const json& doc, const std::string& key) {
    const json& v = doc.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw SchemaError("sweep." + key + ": expected [lo, hi]");
    }
    const double lo = v[0].get<double>();
    const double hi = v[1].get<double>();
    if (!(lo < hi)) throw SchemaError("sweep." + key + ": needs lo < hi");
    return {lo, hi};
}

}  // namespace

SweepConfig parse_sweep_config(const json& doc) {
    if (!doc.is_object()) throw SchemaError("sweep: expected an object");
    for (const auto& [key, value] : doc.items()) {
        static const std::vector<std::string> allowed = {"kind", "omega_B_over_omega", "theta_B", "theta_B_deg",
                                                         "targets", "grid", "mu_sign", "tolerance"};
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw SchemaError("sweep: unknown key '" + key + "'");
        }
    }
    SweepConfig c;
    if (!doc.contains("kind") || !doc.at("kind").is_string()) throw SchemaError("sweep: missing 'kind' (charged or neutral)");
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind != "charged" && kind != "neutral") throw SchemaError("sweep.kind: expected charged or neutral");
    c.charged = kind == "charged";

    if (doc.contains("omega_B_over_omega")) std::tie(c.x_min, c.x_max) = range(doc, "omega_B_over_omega");
    if (c.x_min <= 0.0) throw SchemaError("sweep.omega_B_over_omega: range must be positive");
    if (doc.contains("theta_B") && doc.contains("theta_B_deg")) throw SchemaError("sweep: give theta_B or theta_B_deg");
    if (doc.contains("theta_B")) std::tie(c.theta_min, c.theta_max) = range(doc, "theta_B");
    if (doc.contains("theta_B_deg")) {
        std::tie(c.theta_min, c.theta_max) = range(doc, "theta_B_deg");
        c.theta_min *= pi / 180.0;
        c.theta_max *= pi / 180.0;
    }
    if (c.theta_min < 0.0 || c.theta_max > pi + 1e-12) throw SchemaError("sweep.theta_B: range must lie in [0, pi]");
    c.theta_max = std::min(c.theta_max, pi);

    if (!doc.contains("targets") || !doc.at("targets").is_object()) throw SchemaError("sweep: missing 'targets'");
    const json& t = doc.at("targets");
    for (const auto& [key, value] : t.items()) {
        if (key != "KL_over_K" && key != "KS_over_K") throw SchemaError("sweep.targets: unknown key '" + key + "'");
    }
    if (!t.contains("KS_over_K")) throw SchemaError("sweep.targets: missing KS_over_K");
    c.target_s = read_fraction(t.at("KS_over_K"), "sweep.targets.KS_over_K");
    if (c.charged) {
        if (!t.contains("KL_over_K")) throw SchemaError("sweep.targets: missing KL_over_K");
        c.target_l = read_fraction(t.at("KL_over_K"), "sweep.targets.KL_over_K");
    } else if (t.contains("KL_over_K")) {
        throw SchemaError("sweep.targets: KL_over_K is only used by the charged sweep");
    }
    if (!(c.target_s > 0.0) || (c.charged && !(c.target_l > 0.0))) throw SchemaError("sweep.targets: must be positive");

    if (doc.contains("grid")) {
        const json& g = doc.at("grid");
        if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() || !g[1].is_number_integer()) {
            throw SchemaError("sweep.grid: expected [omega_B cells, theta_B cells]");
        }
        c.x_cells = g[0].get<int>();
        c.theta_cells = g[1].get<int>();
        if (c.x_cells < 1 || c.theta_cells < 1 || c.x_cells > 100000 || c.theta_cells > 100000) {
            throw SchemaError("sweep.grid: cell counts must lie in [1, 100000]");
        }
    }
    if (doc.contains("mu_sign")) {
        if (!doc.at("mu_sign").is_number_integer()) throw SchemaError("sweep.mu_sign: expected +1 or -1");
        c.mu_sign = doc.at("mu_sign").get<int>();
        if (c.mu_sign != 1 && c.mu_sign != -1) throw SchemaError("sweep.mu_sign: expected +1 or -1");
    }
    if (doc.contains("tolerance")) {
        if (!doc.at("tolerance").is_number() || !(doc.at("tolerance").get<double>() > 0.0)) {
            throw SchemaError("sweep.tolerance: expected a positive number");
        }
        c.tolerance = doc.at("tolerance").get<double>();
    }
    return c;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open sweep config " + path.string());
    try {
        return parse_sweep_config(json::parse(in));
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("sweep config is not valid JSON: ") + e.what());
    }
}

std::vector<SweepPoint> sweep(const SweepConfig& config) {
    std::vector<SweepPoint> raw = config.charged ? sweep_charged(config) : sweep_neutral(config);
    std::vector<SweepPoint> out;
    for (const SweepPoint& p : raw) {
        if (!meets_targets(config, p)) continue;
        const bool duplicate = std::any_of(out.begin(), out.end(), [&](const SweepPoint& q) {
            return std::abs(q.omega_B_over_omega - p.omega_B_over_omega) < 1e-9 && std::abs(q.theta_B - p.theta_B) < 1e-9;
        });
        if (!duplicate) out.push_back(p);
    }
    return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::string out = "omega_B_over_omega,theta_B,KL_over_K,KS_over_K\n";
    for (const SweepPoint& p : points) {
        out += format_number(p.omega_B_over_omega) + "," + format_number(p.theta_B) + "," +
               format_optional(p.kl_over_k) + "," + format_number(p.ks_over_k) + "\n";
    }
    return out;
}

}  // namespace geophase::io
