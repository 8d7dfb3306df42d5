#include "tite_stein/design.hpp"

#include <cmath>

namespace tite_stein {

namespace {

void require_open_unit(double value, const char* path) {
    if (!(value > 0.0 && value < 1.0)) {
        throw config_error(path, "must lie in (0, 1), got " + std::to_string(value));
    }
}

void require_positive(double value, const char* path) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw config_error(path, "must be positive, got " + std::to_string(value));
    }
}

}  // namespace

void DesignParams::validate() const {
    if (num_doses < 1) throw config_error("num_doses", "must be at least 1");
    require_open_unit(phi, "phi");
    require_open_unit(phi1, "phi1");
    require_open_unit(phi2, "phi2");
    require_open_unit(psi1, "psi1");
    require_open_unit(psi2, "psi2");
    if (!(phi1 < phi && phi < phi2)) throw config_error("phi1", "require phi1 < phi < phi2");
    if (!(psi1 < psi2)) throw config_error("psi1", "require psi1 < psi2");
    if (!(w1 >= 0.0)) throw config_error("w1", "must be non-negative");
    if (!(w2 >= 0.0)) throw config_error("w2", "must be non-negative");
    require_open_unit(pT_cap, "pT_cap");
    require_open_unit(qE_floor, "qE_floor");
    require_positive(tox_window, "tox_window");
    require_positive(eff_window, "eff_window");
    if (cohort_size < 1) throw config_error("cohort_size", "must be at least 1");
    if (max_cohorts < 1) throw config_error("max_cohorts", "must be at least 1");
    require_open_unit(elim.pi_T, "elim.pi_T");
    require_open_unit(elim.pi_E, "elim.pi_E");
    require_open_unit(elim.c_T, "elim.c_T");
    require_open_unit(elim.c_E, "elim.c_E");
    if (!(suspend_fraction >= 0.0 && suspend_fraction < 1.0)) {
        throw config_error("suspend_fraction", "must lie in [0, 1)");
    }
    if (verify.M < 1) throw config_error("verify.M", "must be at least 1");
    if (!std::isfinite(verify.U_B)) throw config_error("verify.U_B", "must be finite");
    require_open_unit(verify.p_min, "verify.p_min");
    require_positive(verify.alpha_T, "verify.alpha_T");
    require_positive(verify.beta_T, "verify.beta_T");
    require_positive(verify.alpha_E, "verify.alpha_E");
    require_positive(verify.beta_E, "verify.beta_E");
    if (start_dose < 1 || start_dose > num_doses) {
        throw config_error("start_dose", "must lie in [1, num_doses]");
    }
}

Boundaries compute_boundaries(const DesignParams& params) {
    params.validate();
    const double phi = params.phi;
    const double phi1 = params.phi1;
    const double phi2 = params.phi2;
    const double psi1 = params.psi1;
    const double psi2 = params.psi2;

    Boundaries b;
    b.phi_L = std::log((1.0 - phi1) / (1.0 - phi)) /
              std::log(phi * (1.0 - phi1) / (phi1 * (1.0 - phi)));
    b.phi_U = std::log((1.0 - phi) / (1.0 - phi2)) /
              std::log(phi2 * (1.0 - phi) / (phi * (1.0 - phi2)));
    b.psi = std::log((1.0 - psi1) / (1.0 - psi2)) /
            std::log(psi2 * (1.0 - psi1) / (psi1 * (1.0 - psi2)));
    return b;
}

double utility(double p, double q, const DesignParams& params) {
    const double penalty = p > params.phi ? params.w2 * p : 0.0;
    return q - params.w1 * p - penalty;
}

const char* to_string(Mode mode) {
    return mode == Mode::tite ? "TITE" : "COMPLETE";
}

Mode mode_from_string(const std::string& text) {
    if (text == "TITE" || text == "tite") return Mode::tite;
    if (text == "COMPLETE" || text == "complete") return Mode::complete;
    throw config_error("mode", "expected TITE or COMPLETE, got '" + text + "'");
}

}  // namespace tite_stein
