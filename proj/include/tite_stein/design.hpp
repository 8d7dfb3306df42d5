#pragma once

#include <stdexcept>
#include <string>

namespace tite_stein {

/// Raised for any invalid design or scenario configuration. `path` names the
/// offending key (for example "elim.c_T") so callers can point at it.
class config_error : public std::runtime_error {
public:
    config_error(std::string path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Raised when a caller violates an operation's precondition.
class contract_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Mode {
    tite,      // decide with partially observed outcomes
    complete,  // wait for every enrolled outcome before each decision
};

struct EliminationRule {
    double pi_T = 0.3;
    double pi_E = 0.25;
    double c_T = 0.95;
    double c_E = 0.9;
};

struct VerifySettings {
    bool enabled = true;  // false reproduces plain STEIN selection
    int M = 1000;
    double U_B = 0.201;
    double p_min = 0.1;
    double alpha_T = 1.0;
    double beta_T = 1.0;
    double alpha_E = 1.0;
    double beta_E = 1.0;
};

/// Every constant of the design. Defaults are the five-dose simulation
/// settings (target 0.3, 1 / 3 month windows, 15 cohorts of 3).
struct DesignParams {
    int num_doses = 5;
    double phi = 0.3;
    double phi1 = 0.225;
    double phi2 = 0.375;
    double psi1 = 0.3;
    double psi2 = 0.8;
    double w1 = 0.33;
    double w2 = 1.09;
    double pT_cap = 0.3;
    double qE_floor = 0.25;
    double tox_window = 1.0;
    double eff_window = 3.0;
    int cohort_size = 3;
    int max_cohorts = 15;
    EliminationRule elim;
    double suspend_fraction = 0.5;
    VerifySettings verify;
    Mode mode = Mode::tite;
    int start_dose = 1;

    int max_sample_size() const noexcept { return cohort_size * max_cohorts; }

    /// Throws config_error naming the first violated constraint.
    void validate() const;
};

/// Interval-design cut points: toxicity tolerance interval (phi_L, phi_U)
/// and the efficacy cut psi.
struct Boundaries {
    double phi_L = 0.0;
    double phi_U = 0.0;
    double psi = 0.0;
};

Boundaries compute_boundaries(const DesignParams& params);

/// Linear risk-benefit utility q - w1 p - w2 p 1[p > phi].
double utility(double p, double q, const DesignParams& params);

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& text);

}  // namespace tite_stein
