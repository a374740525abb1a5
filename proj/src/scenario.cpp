#include "geophase/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace geophase::io {

namespace {

// ---------------------------------------------------------------- parsing

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw SchemaError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw SchemaError(where + ": unknown key '" + key + "'");
    }
}

double number(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key)) throw SchemaError(where + ": missing '" + key + "'");
    const json& v = obj.at(key);
    if (!v.is_number()) throw SchemaError(where + "." + key + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw SchemaError(where + "." + key + ": not finite");
    return x;
}

std::optional<double> optional_number(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key)) return std::nullopt;
    return number(obj, where, key);
}

// Angle given either as `key` (radians) or `key_deg` (degrees).
std::optional<double> optional_angle(const json& obj, const std::string& where, const std::string& key) {
    const bool rad = obj.contains(key);
    const bool deg = obj.contains(key + "_deg");
    if (rad && deg) throw SchemaError(where + ": give either '" + key + "' or '" + key + "_deg', not both");
    if (rad) return number(obj, where, key);
    if (deg) return number(obj, where, key + "_deg") * pi / 180.0;
    return std::nullopt;
}

double angle(const json& obj, const std::string& where, const std::string& key) {
    const auto a = optional_angle(obj, where, key);
    if (!a) throw SchemaError(where + ": missing '" + key + "' (or '" + key + "_deg')");
    return *a;
}

double positive(const json& obj, const std::string& where, const std::string& key) {
    const double x = number(obj, where, key);
    if (x <= 0.0) throw SchemaError(where + "." + key + ": must be positive");
    return x;
}

int integer(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key)) throw SchemaError(where + ": missing '" + key + "'");
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw SchemaError(where + "." + key + ": expected an integer");
    return v.get<int>();
}

// "1/2", "3/2", "1", 0.5, 1, ...
double half_integer(const json& v, const std::string& where) {
    double x = 0.0;
    if (v.is_number()) {
        x = v.get<double>();
    } else if (v.is_string()) {
        const std::string s = v.get<std::string>();
        const auto slash = s.find('/');
        try {
            std::size_t used = 0;
            if (slash == std::string::npos) {
                x = std::stod(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
            } else {
                const std::string num = s.substr(0, slash);
                const std::string den = s.substr(slash + 1);
                std::size_t u1 = 0;
                std::size_t u2 = 0;
                const long p = std::stol(num, &u1);
                const long q = std::stol(den, &u2);
                if (u1 != num.size() || u2 != den.size() || q <= 0) throw std::invalid_argument(s);
                x = static_cast<double>(p) / static_cast<double>(q);
            }
        } catch (const std::exception&) {
            throw SchemaError(where + ": cannot read '" + s + "' as a number or fraction");
        }
    } else {
        throw SchemaError(where + ": expected a number or a string like \"3/2\"");
    }
    return x;
}

SpinQuantum spin_value(const json& obj, const std::string& where) {
    if (!obj.contains("spin")) throw SchemaError(where + ": missing 'spin'");
    const double s = half_integer(obj.at("spin"), where + ".spin");
    try {
        const SpinQuantum q = SpinQuantum::from_value(s);
        if (q.two_s() < 1) throw std::invalid_argument("spin 0");
        return q;
    } catch (const std::invalid_argument&) {
        throw SchemaError(where + ".spin: must be a positive half-integer");
    }
}

Vec3 vector3(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) throw SchemaError(where + ": expected [x, y, z]");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        if (!v[i].is_number()) throw SchemaError(where + ": expected [x, y, z]");
        out(i) = v[i].get<double>();
    }
    if (!out.allFinite() || out.norm() < 1e-12) throw SchemaError(where + ": vector must be finite and nonzero");
    return out;
}

ComplexVector amplitude_list(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw SchemaError(where + ": expected a non-empty list");
    ComplexVector psi(static_cast<Eigen::Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) {
        const json& a = v[k];
        if (a.is_number()) {
            psi(static_cast<Eigen::Index>(k)) = Complex(a.get<double>(), 0.0);
        } else if (a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number()) {
            psi(static_cast<Eigen::Index>(k)) = Complex(a[0].get<double>(), a[1].get<double>());
        } else {
            throw SchemaError(where + ": each amplitude is a number or [re, im]");
        }
    }
    if (!psi.allFinite()) throw SchemaError(where + ": amplitudes must be finite");
    return psi;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

double parse_cell(const std::string& cell, const std::string& where) {
    double x = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
    const auto [ptr, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || ptr != last) throw SchemaError(where + ": cannot parse '" + cell + "'");
    return x;
}

// CSV with header t,rate,nx,ny,nz.
void read_sample_file(const std::filesystem::path& path, std::vector<double>& times, std::vector<double>& rates,
                      std::vector<Vec3>& directions) {
    std::ifstream in(path);
    if (!in) throw SchemaError("field.file: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("field.file: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,rate,nx,ny,nz") throw SchemaError("field.file: header must be t,rate,nx,ny,nz");
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        const std::string where = "field.file line " + std::to_string(row);
        if (cells.size() != 5) throw SchemaError(where + ": expected 5 columns");
        times.push_back(parse_cell(cells[0], where));
        rates.push_back(parse_cell(cells[1], where));
        directions.emplace_back(parse_cell(cells[2], where), parse_cell(cells[3], where), parse_cell(cells[4], where));
    }
}

void parse_field(const json& obj, const std::filesystem::path& base_dir, Scenario& sc) {
    const std::string where = "params.field";
    if (!obj.is_object() || !obj.contains("type") || !obj.at("type").is_string()) {
        throw SchemaError(where + ": needs a string 'type'");
    }
    const std::string type = obj.at("type").get<std::string>();
    if (type == "rotating") {
        check_keys(obj, where, {"type", "rate", "omega", "theta_B", "theta_B_deg"});
        const double rate = number(obj, where, "rate");
        const double omega = positive(obj, where, "omega");
        sc.field = FieldWaveform::rotating(rate, omega, angle(obj, where, "theta_B"));
        sc.field_period = two_pi / omega;
    } else if (type == "oscillating") {
        // rate offset + amplitude cos(omega t) about a cone rotating at omega
        check_keys(obj, where, {"type", "amplitude", "offset", "omega", "theta_B", "theta_B_deg"});
        const double a = number(obj, where, "amplitude");
        const double b = optional_number(obj, where, "offset").value_or(0.0);
        const double w = positive(obj, where, "omega");
        const double th = angle(obj, where, "theta_B");
        const double st = std::sin(th);
        const double ct = std::cos(th);
        sc.field = FieldWaveform([=](double t) { return b + a * std::cos(w * t); },
                                 [=](double t) { return Vec3(st * std::cos(w * t), st * std::sin(w * t), ct); });
        sc.field_period = two_pi / w;
    } else if (type == "constant") {
        check_keys(obj, where, {"type", "rate", "direction", "period"});
        const double rate = number(obj, where, "rate");
        if (!obj.contains("direction")) throw SchemaError(where + ": missing 'direction'");
        const Vec3 n = vector3(obj.at("direction"), where + ".direction").normalized();
        sc.field = FieldWaveform([rate](double) { return rate; }, [n](double) { return n; });
        if (obj.contains("period")) sc.field_period = positive(obj, where, "period");
    } else if (type == "samples") {
        check_keys(obj, where, {"type", "times", "rates", "directions", "file", "period"});
        std::vector<double> times;
        std::vector<double> rates;
        std::vector<Vec3> directions;
        if (obj.contains("file")) {
            if (obj.contains("times") || obj.contains("rates") || obj.contains("directions")) {
                throw SchemaError(where + ": give either 'file' or inline samples");
            }
            if (!obj.at("file").is_string()) throw SchemaError(where + ".file: expected a path");
            std::filesystem::path file = obj.at("file").get<std::string>();
            if (file.is_relative()) file = base_dir / file;
            read_sample_file(file, times, rates, directions);
        } else {
            for (const char* key : {"times", "rates", "directions"}) {
                if (!obj.contains(key) || !obj.at(key).is_array()) {
                    throw SchemaError(where + ": missing list '" + key + "'");
                }
            }
            for (const auto& t : obj.at("times")) {
                if (!t.is_number()) throw SchemaError(where + ".times: expected numbers");
                times.push_back(t.get<double>());
            }
            for (const auto& r : obj.at("rates")) {
                if (!r.is_number()) throw SchemaError(where + ".rates: expected numbers");
                rates.push_back(r.get<double>());
            }
            for (const auto& d : obj.at("directions")) directions.push_back(vector3(d, where + ".directions"));
        }
        try {
            sc.field = FieldWaveform::from_samples(std::move(times), std::move(rates), std::move(directions));
        } catch (const std::invalid_argument& e) {
            throw SchemaError(where + ": " + e.what());
        }
        if (obj.contains("period")) sc.field_period = positive(obj, where, "period");
    } else {
        throw SchemaError(where + ".type: expected rotating, oscillating, constant or samples");
    }
}

void parse_axis(const json& obj, const std::string& key, std::optional<Vec3>& axis, bool& periodic) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_string() && v.get<std::string>() == "periodic") {
        periodic = true;
    } else {
        axis = vector3(v, "initial_state." + key);
    }
}

void parse_initial(const json& obj, Scenario& sc) {
    const std::string where = "initial_state";
    check_keys(obj, where, {"m", "m_s", "amplitudes", "axis", "spin_axis", "orbital_axis"});
    InitialState& init = sc.initial;
    if (obj.contains("m")) init.m = half_integer(obj.at("m"), where + ".m");
    if (obj.contains("m_s")) init.m_s = half_integer(obj.at("m_s"), where + ".m_s");
    if (obj.contains("axis") && obj.contains("spin_axis")) throw SchemaError(where + ": 'axis' and 'spin_axis' are the same key");
    parse_axis(obj, "axis", init.spin_axis, init.periodic_spin_axis);
    parse_axis(obj, "spin_axis", init.spin_axis, init.periodic_spin_axis);
    parse_axis(obj, "orbital_axis", init.orbital_axis, init.periodic_orbital_axis);
    if (obj.contains("amplitudes")) {
        if (init.m || init.m_s) throw SchemaError(where + ": give either amplitudes or a named eigenstate");
        ComplexVector psi = amplitude_list(obj.at("amplitudes"), where + ".amplitudes");
        const double norm = psi.norm();
        if (norm < 1e-12) throw SchemaError(where + ".amplitudes: zero vector");
        if (std::abs(norm - 1.0) > 1e-6) {
            sc.warnings.push_back("initial amplitudes renormalized (norm was " + format_number(norm) + ")");
        }
        init.amplitudes = psi / norm;
    }

    const bool charged = sc.kind == ScenarioKind::charged_rotating || sc.kind == ScenarioKind::charged_general;
    const bool general = sc.kind == ScenarioKind::neutral_general || sc.kind == ScenarioKind::charged_general;
    const SpinQuantum spin = charged ? sc.charged.spin : sc.neutral.spin;
    const auto check_projection = [&](const SpinQuantum& q, double m, const std::string& key) {
        try {
            q.index_of(m);
        } catch (const std::exception&) {
            throw SchemaError(where + "." + key + ": not a projection of the given angular momentum");
        }
    };

    if (init.amplitudes) {
        const int dim = charged ? sc.charged.dim() : spin.dim();
        if (init.amplitudes->size() != dim) {
            throw SchemaError(where + ".amplitudes: expected " + std::to_string(dim) + " entries");
        }
        if (sc.kind == ScenarioKind::charged_general) {
            throw SchemaError(where + ": charged_general needs a named eigenstate (m, m_s and both axes)");
        }
        if (sc.kind == ScenarioKind::neutral_general && spin.two_s() != 1) {
            throw SchemaError(where + ": explicit amplitudes for neutral_general need spin 1/2; use m_s and axis");
        }
        if (init.spin_axis || init.orbital_axis || init.periodic_spin_axis || init.periodic_orbital_axis) {
            throw SchemaError(where + ": axes are not used with explicit amplitudes");
        }
        return;
    }
    if (!init.m_s) throw SchemaError(where + ": needs 'm_s' or 'amplitudes'");
    check_projection(spin, *init.m_s, "m_s");
    if (charged) {
        if (!init.m) throw SchemaError(where + ": charged kinds need 'm'");
        check_projection(SpinQuantum(2 * sc.charged.l), *init.m, "m");
    } else if (init.m) {
        throw SchemaError(where + ": 'm' is only used by the charged kinds");
    }
    if (general) {
        if (!init.spin_axis && !init.periodic_spin_axis) throw SchemaError(where + ": needs 'axis' (vector or \"periodic\")");
        if (charged && !init.orbital_axis && !init.periodic_orbital_axis) {
            throw SchemaError(where + ": needs 'orbital_axis' (vector or \"periodic\")");
        }
        if (!charged && (init.orbital_axis || init.periodic_orbital_axis)) {
            throw SchemaError(where + ": 'orbital_axis' is only used by charged_general");
        }
        if ((init.periodic_spin_axis || init.periodic_orbital_axis) && !sc.field_period) {
            throw SchemaError(where + ": a periodic axis needs a field with a period");
        }
    } else if (init.spin_axis || init.orbital_axis || init.periodic_spin_axis || init.periodic_orbital_axis) {
        throw SchemaError(where + ": axes are only used by the general kinds");
    }
}

void parse_params(const json& obj, const std::filesystem::path& base_dir, Scenario& sc) {
    const std::string where = "params";
    switch (sc.kind) {
    case ScenarioKind::neutral_rotating: {
        check_keys(obj, where, {"omega_B", "omega", "theta_B", "theta_B_deg", "mu_sign", "spin"});
        RotatingFieldParams& p = sc.neutral;
        p.omega_B = positive(obj, where, "omega_B");
        p.omega = positive(obj, where, "omega");
        p.theta_B = angle(obj, where, "theta_B");
        p.mu_sign = obj.contains("mu_sign") ? integer(obj, where, "mu_sign") : 1;
        p.spin = spin_value(obj, where);
        try {
            p.validate();
        } catch (const std::invalid_argument& e) {
            throw SchemaError(where + ": " + e.what());
        }
        break;
    }
    case ScenarioKind::charged_rotating: {
        check_keys(obj, where, {"omega_B", "omega", "theta_B", "theta_B_deg", "l", "spin", "epsilon_nl"});
        ChargedParams& p = sc.charged;
        p.omega_B = positive(obj, where, "omega_B");
        p.omega = positive(obj, where, "omega");
        p.theta_B = angle(obj, where, "theta_B");
        p.l = integer(obj, where, "l");
        p.spin = spin_value(obj, where);
        p.epsilon_nl = optional_number(obj, where, "epsilon_nl").value_or(0.0);
        try {
            p.validate();
        } catch (const std::invalid_argument& e) {
            throw SchemaError(where + ": " + e.what());
        }
        break;
    }
    case ScenarioKind::neutral_general:
        check_keys(obj, where, {"spin", "field"});
        sc.neutral.spin = spin_value(obj, where);
        if (!obj.contains("field")) throw SchemaError(where + ": missing 'field'");
        parse_field(obj.at("field"), base_dir, sc);
        break;
    case ScenarioKind::charged_general:
        check_keys(obj, where, {"l", "spin", "epsilon_nl", "field"});
        sc.charged.l = integer(obj, where, "l");
        if (sc.charged.l < 0) throw SchemaError(where + ".l: must be >= 0");
        sc.charged.spin = spin_value(obj, where);
        sc.charged.epsilon_nl = optional_number(obj, where, "epsilon_nl").value_or(0.0);
        if (!obj.contains("field")) throw SchemaError(where + ": missing 'field'");
        parse_field(obj.at("field"), base_dir, sc);
        break;
    }
}

void parse_grid(const json& obj, Scenario& sc) {
    const std::string where = "grid";
    check_keys(obj, where, {"dt", "horizon", "periods"});
    if (obj.contains("dt")) sc.grid.dt = positive(obj, where, "dt");
    if (obj.contains("horizon") && obj.contains("periods")) throw SchemaError(where + ": give either 'horizon' or 'periods'");
    if (obj.contains("horizon")) sc.grid.horizon = positive(obj, where, "horizon");
    if (obj.contains("periods")) sc.grid.periods = positive(obj, where, "periods");
}

void parse_tolerances(const json& obj, Scenario& sc) {
    const std::string where = "tolerances";
    check_keys(obj, where, {"fidelity", "oracle_residual", "cyclic_ratio", "closure"});
    if (obj.contains("fidelity")) sc.tol.fidelity = positive(obj, where, "fidelity");
    if (obj.contains("oracle_residual")) sc.tol.oracle_residual = positive(obj, where, "oracle_residual");
    if (obj.contains("cyclic_ratio")) sc.tol.cyclic_ratio = positive(obj, where, "cyclic_ratio");
    if (obj.contains("closure")) sc.tol.closure = positive(obj, where, "closure");
}

// ---------------------------------------------------------------- running

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

double base_period(const Scenario& sc) {
    switch (sc.kind) {
    case ScenarioKind::neutral_rotating: return sc.neutral.period();
    case ScenarioKind::charged_rotating: return sc.charged.period();
    default: break;
    }
    if (!sc.field_period) throw SchemaError("params.field: no period; give grid.horizon and grid.dt");
    return *sc.field_period;
}

double step_of(const Scenario& sc) {
    if (sc.grid.dt) return *sc.grid.dt;
    if (!sc.field_period && (sc.kind == ScenarioKind::neutral_general || sc.kind == ScenarioKind::charged_general)) {
        throw SchemaError("grid.dt: required when the field has no period");
    }
    return 1e-4 * base_period(sc);
}

// Horizon for trajectories and general-field runs: explicit horizon, else
// `periods` times the cycle (or field period).
double horizon_of(const Scenario& sc, double cycle) {
    if (sc.grid.horizon) return *sc.grid.horizon;
    return sc.grid.periods.value_or(1.0) * cycle;
}

std::vector<double> step_grid(double horizon, double dt) {
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / dt - 1e-9)));
    return uniform_grid(horizon, steps);
}

std::string trajectory_table(std::span<const double> times, std::span<const Vec3> v, std::span<const Vec3> u) {
    std::string out = u.empty() ? "t,vx,vy,vz\n" : "t,vx,vy,vz,ux,uy,uz\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        out += format_number(times[k]);
        for (int i = 0; i < 3; ++i) out += "," + format_number(v[k](i));
        if (!u.empty()) {
            for (int i = 0; i < 3; ++i) out += "," + format_number(u[k](i));
        }
        out += '\n';
    }
    return out;
}

std::string phase_table(double delta, double beta, double gamma, const std::optional<double>& omega_u,
                        const std::optional<double>& omega_v, double fidelity) {
    return "delta,beta,gamma,omega_u,omega_v,fidelity\n" + format_number(delta) + "," + format_number(beta) + "," +
           format_number(gamma) + "," + format_optional(omega_u) + "," + format_optional(omega_v) + "," +
           format_number(fidelity) + "\n";
}

void require_trust(bool ok, const std::string& what) {
    if (!ok) throw TrustFailure(what);
}

ComplexVector neutral_initial_state(const Scenario& sc, const EffectiveFrame& frame, const SpinOps& ops) {
    if (sc.initial.amplitudes) return *sc.initial.amplitudes;
    return spin_direction_eigenbasis(ops, frame.axis).state(*sc.initial.m_s, ops.spin);
}

ComplexVector charged_initial_state(const Scenario& sc, const DualFrame& frames) {
    if (sc.initial.amplitudes) return *sc.initial.amplitudes;
    for (const ShellEigenstate& e : effective_eigenstates(sc.charged, frames)) {
        if (e.m == *sc.initial.m && e.m_s == *sc.initial.m_s) return e.state;
    }
    throw SchemaError("initial_state: no eigenstate with the given (m, m_s)");
}

json base_report(const Scenario& sc) {
    json r;
    r["scenario"] = sc.source;
    r["kind"] = to_string(sc.kind);
    r["warnings"] = sc.warnings;
    r["files"] = {{"trajectory", "trajectory.csv"}, {"phases", "phases.csv"}};
    return r;
}

json oracle_json(const SteppedPropagation& prop, const PhaseDecomposition& d) {
    return {{"dt", prop.dt},
            {"steps", prop.times.size() - 1},
            {"norm_drift", prop.norm_drift},
            {"delta", d.delta},
            {"beta", d.beta},
            {"gamma", optional_json(d.gamma)},
            {"fidelity", d.fidelity}};
}

RunArtifacts run_neutral_rotating(const Scenario& sc) {
    const RotatingFieldParams& p = sc.neutral;
    const auto info = detect_cyclicity(p, sc.tol.cyclic_ratio);
    if (!info) throw NotCyclicError("omega_S/omega is not a rational K_S/K within tolerance; no cyclic period");
    const EffectiveFrame frame = effective_frame(p);
    const SpinOps ops = spin_operators(p.spin);
    const ComplexVector psi0 = neutral_initial_state(sc, frame, ops);

    PhaseReport closed;
    try {
        closed = phase_report(p, psi0, *info);
    } catch (const ConsistencyError& e) {
        throw TrustFailure(e.what());
    }
    const HamiltonianSampler h = [&](double t) { return rotating_hamiltonian(p, ops, t); };
    const SteppedPropagation prop = timestep_propagate(h, psi0, step_of(sc), info->T);
    const PhaseDecomposition oracle = phase_decompose(prop, h, 0, sc.tol.fidelity);

    require_trust(closed.cyclic_fidelity >= 1.0 - sc.tol.fidelity, "cyclic fidelity below 1 - tolerance");
    require_trust(oracle.gamma.has_value(), "oracle run is not cyclic within the fidelity tolerance");
    const double gamma_residual = phase_distance(closed.gamma, *oracle.gamma);
    require_trust(gamma_residual <= sc.tol.oracle_residual,
                  "oracle gamma differs from the closed form by " + format_number(gamma_residual));

    const auto grid = step_grid(horizon_of(sc, info->T), step_of(sc));
    const Trajectory tr = mean_spin_trajectory(p, psi0, grid);

    RunArtifacts out;
    out.report = base_report(sc);
    out.report["cyclic"] = {{"K", info->K}, {"K_S", info->K_S}, {"T", info->T}, {"ratio_residual", info->ratio_residual}};
    out.report["frame"] = {{"omega_S", frame.rate}, {"theta_S", frame.theta}, {"n_S", vec_json(frame.axis.vec())}};
    out.report["phases"] = {{"delta", closed.delta},
                            {"beta", closed.beta},
                            {"gamma", closed.gamma},
                            {"omega_v", optional_json(closed.omega_v)},
                            {"v0", vec_json(closed.v0)},
                            {"v0_norm", closed.v0_norm},
                            {"cyclic_fidelity", closed.cyclic_fidelity},
                            {"relation_residual", closed.relation_residual}};
    out.report["oracle"] = oracle_json(prop, oracle);
    out.report["oracle"]["gamma_residual"] = gamma_residual;
    out.trajectory_csv = trajectory_table(tr.times, tr.vectors, {});
    out.phases_csv = phase_table(closed.delta, closed.beta, closed.gamma, std::nullopt, closed.omega_v,
                                 closed.cyclic_fidelity);
    return out;
}

RunArtifacts run_charged_rotating(const Scenario& sc) {
    const ChargedParams& p = sc.charged;
    const auto info = detect_dual_cyclicity(p, sc.tol.cyclic_ratio);
    if (!info) throw NotCyclicError("omega_L/omega or omega_S/omega is not rational within tolerance; no cyclic period");
    const DualFrame frames = dual_frames(p);
    const ShellOperators ops = shell_operators(p.l, p.spin);
    const ComplexVector psi0 = charged_initial_state(sc, frames);

    DualPhaseReport closed;
    try {
        closed = charged_phase_report(p, psi0, *info);
    } catch (const ConsistencyError& e) {
        throw TrustFailure(e.what());
    }
    const HamiltonianSampler h = [&](double t) { return charged_hamiltonian(p, ops, t); };
    const SteppedPropagation prop = timestep_propagate(h, psi0, step_of(sc), info->T);
    const PhaseDecomposition oracle = phase_decompose(prop, h, 0, sc.tol.fidelity);

    require_trust(closed.cyclic_fidelity >= 1.0 - sc.tol.fidelity, "cyclic fidelity below 1 - tolerance");
    require_trust(oracle.gamma.has_value(), "oracle run is not cyclic within the fidelity tolerance");
    const double gamma_residual = phase_distance(closed.gamma, *oracle.gamma);
    require_trust(gamma_residual <= sc.tol.oracle_residual,
                  "oracle gamma differs from the closed form by " + format_number(gamma_residual));

    const auto grid = step_grid(horizon_of(sc, info->T), step_of(sc));
    const DualTrajectory tr = charged_mean_trajectory(p, closed.u0, closed.v0, grid);

    RunArtifacts out;
    out.report = base_report(sc);
    out.report["cyclic"] = {{"K", info->K},
                            {"K_L", info->K_L},
                            {"K_S", info->K_S},
                            {"T", info->T},
                            {"ratio_residual", info->ratio_residual}};
    out.report["frame"] = {{"omega_L", frames.orbital.rate},
                           {"theta_L", frames.orbital.theta},
                           {"n_L", vec_json(frames.orbital.axis.vec())},
                           {"omega_S", frames.spin.rate},
                           {"theta_S", frames.spin.theta},
                           {"n_S", vec_json(frames.spin.axis.vec())}};
    out.report["phases"] = {{"delta", closed.delta},
                            {"beta", closed.beta},
                            {"gamma", closed.gamma},
                            {"omega_u", optional_json(closed.omega_u)},
                            {"omega_v", optional_json(closed.omega_v)},
                            {"u0", vec_json(closed.u0)},
                            {"v0", vec_json(closed.v0)},
                            {"cyclic_fidelity", closed.cyclic_fidelity},
                            {"residual_82", closed.residual_82},
                            {"residual_83", optional_json(closed.residual_83)}};
    out.report["oracle"] = oracle_json(prop, oracle);
    out.report["oracle"]["gamma_residual"] = gamma_residual;
    out.trajectory_csv = trajectory_table(tr.times, tr.v, tr.u);
    out.phases_csv =
        phase_table(closed.delta, closed.beta, closed.gamma, closed.omega_u, closed.omega_v, closed.cyclic_fidelity);
    return out;
}

UnitVector3 resolve_axis(const Scenario& sc, const std::optional<Vec3>& axis, bool periodic, double coupling,
                         double dt) {
    if (!periodic) return UnitVector3::normalized(*axis);
    const auto steps = static_cast<std::size_t>(std::max(1000.0, std::ceil(*sc.field_period / dt)));
    return periodic_fixed_axis(*sc.field, *sc.field_period, steps, coupling);
}

struct NeutralGeneralSetup {
    SpinOps ops;
    UnitVector3 e0;
    double m_s;
    ComplexVector psi0;
};

NeutralGeneralSetup neutral_general_setup(const Scenario& sc, double dt) {
    const SpinOps ops = spin_operators(sc.neutral.spin);
    if (sc.initial.amplitudes) {
        return {ops, axis_from_spin_half_state(*sc.initial.amplitudes), 0.5, *sc.initial.amplitudes};
    }
    const UnitVector3 e0 = resolve_axis(sc, sc.initial.spin_axis, sc.initial.periodic_spin_axis, -1.0, dt);
    return {ops, e0, *sc.initial.m_s, axis_eigenstate(ops, e0, *sc.initial.m_s)};
}

double general_horizon(const Scenario& sc) {
    if (sc.grid.horizon) return *sc.grid.horizon;
    if (!sc.field_period) throw SchemaError("grid.horizon: required when the field has no period");
    return sc.grid.periods.value_or(1.0) * *sc.field_period;
}

RunArtifacts run_neutral_general(const Scenario& sc) {
    const double dt = step_of(sc);
    const double horizon = general_horizon(sc);
    const NeutralGeneralSetup s = neutral_general_setup(sc, dt);
    const HamiltonianSampler h = neutral_hamiltonian(*sc.field, s.ops);
    const SteppedPropagation prop = timestep_propagate(h, s.psi0, dt, horizon);
    const AxisTrajectory axis = transport_axis(*sc.field, s.e0, prop.times, s.m_s);
    const auto closure = check_closure(axis, sc.tol.closure);
    if (!closure) throw NotCyclicError("spin axis does not return to itself at the horizon");

    const GeometricPhase g = cyclic_geometric_phase(axis, *closure, s.m_s, sc.tol.closure);
    const TotalPhaseCheck c = total_phase_check(*sc.field, s.ops, prop, axis, *closure, s.m_s);
    const PhaseDecomposition oracle = phase_decompose(prop, h, 0, sc.tol.fidelity);
    const double eigen = eigen_residual(s.ops, prop, axis, s.m_s);
    const double mean_dev = mean_spin_deviation(s.ops, prop, axis, s.m_s);
    const double gamma_residual = phase_distance(g.gamma, c.gamma_overlap);

    require_trust(oracle.fidelity >= 1.0 - sc.tol.fidelity, "cyclic fidelity below 1 - tolerance");
    require_trust(eigen <= sc.tol.oracle_residual, "state leaves the axis eigenspace, residual " + format_number(eigen));
    require_trust(gamma_residual <= sc.tol.oracle_residual,
                  "oracle gamma differs from the transport value by " + format_number(gamma_residual));

    RunArtifacts out;
    out.report = base_report(sc);
    if (axis.step_too_coarse) out.report["warnings"].push_back("time step rotates the axis by more than 0.1 rad");
    out.report["cyclic"] = {{"K", closure->K}, {"T", closure->T}, {"closure_error", closure->closure_error}};
    out.report["axis"] = {{"e0", vec_json(s.e0.vec())}, {"m_s", s.m_s}, {"frame_rotated", axis.frame_rotated}};
    out.report["phases"] = {{"delta", c.delta_alpha},
                            {"beta", c.beta},
                            {"gamma", g.gamma},
                            {"omega_e", g.omega_e},
                            {"omega_v", optional_json(g.omega_v)},
                            {"cyclic_fidelity", oracle.fidelity}};
    out.report["oracle"] = oracle_json(prop, oracle);
    out.report["oracle"]["gamma_residual"] = gamma_residual;
    out.report["oracle"]["eigen_residual"] = eigen;
    out.report["oracle"]["mean_spin_deviation"] = mean_dev;

    std::vector<Vec3> v(axis.axis.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = s.m_s * axis.axis[k];
    out.trajectory_csv = trajectory_table(axis.times, v, {});
    out.phases_csv = phase_table(c.delta_alpha, c.beta, g.gamma, std::nullopt, g.omega_v, oracle.fidelity);
    return out;
}

struct ChargedGeneralSetup {
    ShellOperators ops;
    UnitVector3 d0, e0;
    ComplexVector psi0;
};

ChargedGeneralSetup charged_general_setup(const Scenario& sc, double dt) {
    ShellOperators ops = shell_operators(sc.charged.l, sc.charged.spin);
    const UnitVector3 d0 = resolve_axis(sc, sc.initial.orbital_axis, sc.initial.periodic_orbital_axis, 1.0, dt);
    const UnitVector3 e0 = resolve_axis(sc, sc.initial.spin_axis, sc.initial.periodic_spin_axis, 2.0, dt);
    ComplexVector psi0 = dual_axis_eigenstate(ops, d0, *sc.initial.m, e0, *sc.initial.m_s);
    return {std::move(ops), d0, e0, std::move(psi0)};
}

RunArtifacts run_charged_general(const Scenario& sc) {
    const double dt = step_of(sc);
    const double horizon = general_horizon(sc);
    const double m = *sc.initial.m;
    const double m_s = *sc.initial.m_s;
    const ChargedGeneralSetup s = charged_general_setup(sc, dt);
    const HamiltonianSampler h = charged_field_hamiltonian(*sc.field, s.ops, sc.charged.epsilon_nl);
    const SteppedPropagation prop = timestep_propagate(h, s.psi0, dt, horizon);
    const DualAxisTrajectory axes =
        dual_axis_transport(*sc.field, s.d0, s.e0, prop.times, m, m_s, sc.charged.epsilon_nl);
    const auto closure = check_dual_closure(axes, sc.tol.closure);
    if (!closure) throw NotCyclicError("orbital or spin axis does not return to itself at the horizon");

    const DualGeometricPhase g = dual_geometric_phase(axes, *closure, sc.tol.closure);
    const DualTotalPhaseCheck c = dual_total_phase_check(h, prop, axes, *closure);
    const PhaseDecomposition oracle = phase_decompose(prop, h, 0, sc.tol.fidelity);
    const DualEigenResiduals res = dual_eigen_residuals(s.ops, prop, axes);
    const double gamma_residual = phase_distance(g.gamma, c.gamma_overlap);
    const double eigen = std::max(res.orbital, res.spin);

    require_trust(oracle.fidelity >= 1.0 - sc.tol.fidelity, "cyclic fidelity below 1 - tolerance");
    require_trust(eigen <= sc.tol.oracle_residual, "state leaves the axis eigenspaces, residual " + format_number(eigen));
    require_trust(gamma_residual <= sc.tol.oracle_residual,
                  "oracle gamma differs from the transport value by " + format_number(gamma_residual));

    RunArtifacts out;
    out.report = base_report(sc);
    if (axes.orbital.step_too_coarse || axes.spin.step_too_coarse) {
        out.report["warnings"].push_back("time step rotates an axis by more than 0.1 rad");
    }
    out.report["cyclic"] = {{"K_d", closure->K_d},
                            {"K_e", closure->K_e},
                            {"T", closure->T},
                            {"closure_error", closure->closure_error}};
    out.report["axes"] = {{"d0", vec_json(s.d0.vec())}, {"e0", vec_json(s.e0.vec())}, {"m", m}, {"m_s", m_s}};
    out.report["phases"] = {{"delta", c.delta_alpha},
                            {"beta", c.beta},
                            {"gamma", g.gamma},
                            {"omega_d", g.omega_d},
                            {"omega_e", g.omega_e},
                            {"omega_u", optional_json(g.omega_u)},
                            {"omega_v", optional_json(g.omega_v)},
                            {"cyclic_fidelity", oracle.fidelity}};
    out.report["oracle"] = oracle_json(prop, oracle);
    out.report["oracle"]["gamma_residual"] = gamma_residual;
    out.report["oracle"]["eigen_residual_orbital"] = res.orbital;
    out.report["oracle"]["eigen_residual_spin"] = res.spin;
    out.report["oracle"]["u_deviation"] = res.u_deviation;
    out.report["oracle"]["v_deviation"] = res.v_deviation;

    std::vector<Vec3> u(prop.times.size());
    std::vector<Vec3> v(prop.times.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        u[k] = m * axes.orbital.axis[k];
        v[k] = m_s * axes.spin.axis[k];
    }
    out.trajectory_csv = trajectory_table(prop.times, v, u);
    out.phases_csv = phase_table(c.delta_alpha, c.beta, g.gamma, g.omega_u, g.omega_v, oracle.fidelity);
    return out;
}

}  // namespace

double read_fraction(const json& value, const std::string& where) { return half_integer(value, where); }

std::string to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::neutral_rotating: return "neutral_rotating";
    case ScenarioKind::neutral_general: return "neutral_general";
    case ScenarioKind::charged_rotating: return "charged_rotating";
    case ScenarioKind::charged_general: return "charged_general";
    }
    return "?";
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
    check_keys(doc, "scenario", {"kind", "params", "initial_state", "grid", "tolerances"});
    Scenario sc;
    sc.source = doc;
    if (!doc.contains("kind") || !doc.at("kind").is_string()) throw SchemaError("scenario: missing string 'kind'");
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "neutral_rotating") {
        sc.kind = ScenarioKind::neutral_rotating;
    } else if (kind == "neutral_general") {
        sc.kind = ScenarioKind::neutral_general;
    } else if (kind == "charged_rotating") {
        sc.kind = ScenarioKind::charged_rotating;
    } else if (kind == "charged_general") {
        sc.kind = ScenarioKind::charged_general;
    } else {
        throw SchemaError("scenario.kind: unknown kind '" + kind + "'");
    }
    if (!doc.contains("params")) throw SchemaError("scenario: missing 'params'");
    if (!doc.contains("initial_state")) throw SchemaError("scenario: missing 'initial_state'");
    parse_params(doc.at("params"), base_dir, sc);
    if (doc.contains("grid")) parse_grid(doc.at("grid"), sc);
    if (doc.contains("tolerances")) parse_tolerances(doc.at("tolerances"), sc);
    parse_initial(doc.at("initial_state"), sc);
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open scenario file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("scenario file is not valid JSON: ") + e.what());
    }
    return parse_scenario(doc, path.parent_path());
}

void apply_overrides(Scenario& sc, const Overrides& o) {
    if (o.dt) {
        if (!(*o.dt > 0.0)) throw SchemaError("--dt must be positive");
        sc.grid.dt = *o.dt;
    }
    if (o.periods) {
        if (!(*o.periods > 0.0)) throw SchemaError("--periods must be positive");
        sc.grid.periods = *o.periods;
        sc.grid.horizon.reset();
    }
    if (o.tolerance) {
        if (!(*o.tolerance > 0.0)) throw SchemaError("--tolerance must be positive");
        sc.tol.oracle_residual = *o.tolerance;
    }
}

RunArtifacts run_scenario(const Scenario& sc) {
    switch (sc.kind) {
    case ScenarioKind::neutral_rotating: return run_neutral_rotating(sc);
    case ScenarioKind::charged_rotating: return run_charged_rotating(sc);
    case ScenarioKind::neutral_general: return run_neutral_general(sc);
    case ScenarioKind::charged_general: return run_charged_general(sc);
    }
    throw std::logic_error("unhandled scenario kind");
}

std::string trajectory_only(const Scenario& sc) {
    const double dt = step_of(sc);
    switch (sc.kind) {
    case ScenarioKind::neutral_rotating: {
        const RotatingFieldParams& p = sc.neutral;
        const auto info = detect_cyclicity(p, sc.tol.cyclic_ratio);
        const auto grid = step_grid(horizon_of(sc, info ? info->T : p.period()), dt);
        const SpinOps ops = spin_operators(p.spin);
        const Trajectory tr = mean_spin_trajectory(p, neutral_initial_state(sc, effective_frame(p), ops), grid);
        return trajectory_table(tr.times, tr.vectors, {});
    }
    case ScenarioKind::charged_rotating: {
        const ChargedParams& p = sc.charged;
        const auto info = detect_dual_cyclicity(p, sc.tol.cyclic_ratio);
        const auto grid = step_grid(horizon_of(sc, info ? info->T : p.period()), dt);
        const ShellOperators ops = shell_operators(p.l, p.spin);
        const auto [u0, v0] = shell_expectations(ops, charged_initial_state(sc, dual_frames(p)));
        const DualTrajectory tr = charged_mean_trajectory(p, u0, v0, grid);
        return trajectory_table(tr.times, tr.v, tr.u);
    }
    case ScenarioKind::neutral_general: {
        const NeutralGeneralSetup s = neutral_general_setup(sc, dt);
        const AxisTrajectory axis = integrate_axis(*sc.field, s.e0, step_grid(general_horizon(sc), dt), -1.0);
        std::vector<Vec3> v(axis.axis.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = s.m_s * axis.axis[k];
        return trajectory_table(axis.times, v, {});
    }
    case ScenarioKind::charged_general: {
        const ChargedGeneralSetup s = charged_general_setup(sc, dt);
        const auto grid = step_grid(general_horizon(sc), dt);
        const AxisTrajectory d = integrate_axis(*sc.field, s.d0, grid, 1.0);
        const AxisTrajectory e = integrate_axis(*sc.field, s.e0, grid, 2.0);
        std::vector<Vec3> u(grid.size());
        std::vector<Vec3> v(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            u[k] = *sc.initial.m * d.axis[k];
            v[k] = *sc.initial.m_s * e.axis[k];
        }
        return trajectory_table(grid, v, u);
    }
    }
    throw std::logic_error("unhandled scenario kind");
}

std::string format_number(double x) {
    if (x == 0.0) return "0";  // also folds -0
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
    return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

void write_outputs(const std::filesystem::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> temps;
    try {
        for (const auto& [name, contents] : files) {
            const std::filesystem::path tmp = dir / (name + ".partial");
            temps.push_back(tmp);
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << contents;
            out.close();
            if (!out) throw Error("cannot write " + tmp.string());
        }
    } catch (...) {
        for (const auto& t : temps) std::filesystem::remove(t);
        throw;
    }
    for (std::size_t k = 0; k < files.size(); ++k) std::filesystem::rename(temps[k], dir / files[k].first);
}

}  // namespace geophase::io
