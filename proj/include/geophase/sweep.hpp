#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geophase/scenario.hpp"

namespace geophase::io {

// Search for field settings whose effective-frame rates hit prescribed
// rationals of omega. Charged: omega_L/omega = KL_over_K and
// omega_S/omega = KS_over_K (isolated points). Neutral: omega_S/omega =
// KS_over_K (a curve, reported once per theta_B grid line).
struct SweepConfig {
    bool charged = true;
    double x_min = 0.1, x_max = 3.0;          // omega_B / omega
    double theta_min = 0.0, theta_max = pi;   // theta_B
    int x_cells = 200;
    int theta_cells = 200;
    double target_l = 1.0;  // KL_over_K (charged only)
    double target_s = 2.0;  // KS_over_K
    int mu_sign = 1;        // neutral only
    double tolerance = 1e-9;
};

struct SweepPoint {
    double omega_B_over_omega = 0.0;
    double theta_B = 0.0;
    std::optional<double> kl_over_k;  // achieved omega_L/omega (charged)
    double ks_over_k = 0.0;           // achieved omega_S/omega
};

SweepConfig parse_sweep_config(const json& doc);
SweepConfig load_sweep_config(const std::filesystem::path& path);

// Grid scan plus bisection; every returned point meets the targets to
// config.tolerance. Cells run concurrently; the order of the result is the
// grid order and does not depend on scheduling.
std::vector<SweepPoint> sweep(const SweepConfig& config);

// CSV omega_B_over_omega,theta_B,KL_over_K,KS_over_K.
std::string sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace geophase::io
