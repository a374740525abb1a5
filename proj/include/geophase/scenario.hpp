#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geophase/charged_atom.hpp"

namespace geophase::io {

using json = nlohmann::json;

inline constexpr int exit_ok = 0;
inline constexpr int exit_schema = 2;
inline constexpr int exit_not_cyclic = 3;
inline constexpr int exit_untrusted = 4;

// Scenario file does not follow the schema (exit code 2).
class SchemaError : public Error {
public:
    using Error::Error;
};

// A phase could not be certified by the oracle cross-check (exit code 4).
class TrustFailure : public Error {
public:
    using Error::Error;
};

enum class ScenarioKind { neutral_rotating, neutral_general, charged_rotating, charged_general };

std::string to_string(ScenarioKind kind);

struct Tolerances {
    double fidelity = 1e-6;         // cyclic fidelity must be >= 1 - fidelity
    double oracle_residual = 1e-5;  // largest accepted distance to the oracle
    double cyclic_ratio = default_cyclic_tol;
    double closure = default_closure_tol;
};

// Named eigenstate or explicit amplitudes (s_z basis; orbital index outer for
// the charged kinds). Axes are only used by the general kinds; an empty axis
// with `periodic_*` set means "the axis that returns after one field period".
struct InitialState {
    std::optional<double> m;
    std::optional<double> m_s;
    std::optional<Vec3> spin_axis;
    std::optional<Vec3> orbital_axis;
    bool periodic_spin_axis = false;
    bool periodic_orbital_axis = false;
    std::optional<ComplexVector> amplitudes;
};

struct GridSpec {
    std::optional<double> dt;
    std::optional<double> horizon;
    std::optional<double> periods;
};

struct Scenario {
    ScenarioKind kind = ScenarioKind::neutral_rotating;
    json source;
    RotatingFieldParams neutral;  // neutral_rotating; spin also for neutral_general
    ChargedParams charged;        // charged_rotating; l, spin, epsilon_nl also for charged_general
    std::optional<FieldWaveform> field;
    std::optional<double> field_period;
    InitialState initial;
    GridSpec grid;
    Tolerances tol;
    std::vector<std::string> warnings;
};

// Sample files named in the scenario are resolved against base_dir.
Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

struct Overrides {
    std::optional<double> dt;
    std::optional<double> periods;
    std::optional<double> tolerance;  // oracle residual tolerance
};

void apply_overrides(Scenario& scenario, const Overrides& overrides);

struct RunArtifacts {
    json report;
    std::string trajectory_csv;
    std::string phases_csv;
};

// Full run: closed-form or transport phases certified against the stepping
// oracle. Throws NotCyclicError or TrustFailure; nothing is written here.
RunArtifacts run_scenario(const Scenario& scenario);

// Trajectory CSV only; no phases and no oracle.
std::string trajectory_only(const Scenario& scenario);

// A JSON number or a string "p/q" / "p".
double read_fraction(const json& value, const std::string& where);

// 17 significant digits, shortest exponent form.
std::string format_number(double x);
std::string format_optional(const std::optional<double>& x);

// Writes each (name, contents) pair into dir. All files are first written to
// temporaries and renamed only once every write has succeeded.
void write_outputs(const std::filesystem::path& dir,
                   const std::vector<std::pair<std::string, std::string>>& files);

}  // namespace geophase::io
