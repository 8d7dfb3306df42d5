#pragma once

#include "tite_stein/design.hpp"

#include <span>

namespace tite_stein {

enum class Endpoint { toxicity, efficacy };

const char* to_string(Endpoint endpoint);

/// One enrolled patient. Event indicators are latent in simulation (the
/// event may lie in the future) and observed-so-far in live conduct.
/// Event times are measured from enrollment and lie in (0, window].
struct PatientRecord {
    int dose = 1;  // 1-based
    double enroll_time = 0.0;
    bool tox_event = false;
    double tox_time = 0.0;
    bool eff_event = false;
    double eff_time = 0.0;

    bool has_event(Endpoint endpoint) const noexcept {
        return endpoint == Endpoint::toxicity ? tox_event : eff_event;
    }
    double event_time(Endpoint endpoint) const noexcept {
        return endpoint == Endpoint::toxicity ? tox_time : eff_time;
    }

    /// Calendar time at which the endpoint becomes ascertained: the event
    /// time when an event occurs, otherwise the end of the window.
    double resolution_time(Endpoint endpoint, double window) const noexcept {
        return enroll_time + (has_event(endpoint) ? event_time(endpoint) : window);
    }
};

/// Effective counts for one endpoint at one dose at one calendar time.
/// n_events + m_complete + n_pending == n_patients.
struct InterimSummary {
    int n_patients = 0;
    int n_events = 0;
    int m_complete = 0;
    double m_effective = 0.0;
    int n_pending = 0;
};

/// Fractional follow-up credit min(elapsed / window, 1).
double follow_up_weight(double elapsed, double window);

double window_for(Endpoint endpoint, const DesignParams& params) noexcept;

/// Summarizes the patients of one dose at calendar time `now`. Patients
/// enrolled after `now` are a contract violation.
InterimSummary summarize(std::span<const PatientRecord> patients, double now, Endpoint endpoint,
                         const DesignParams& params);

/// n_events / (n_events + m_effective); throws contract_error when the
/// denominator is zero.
double interim_estimate(const InterimSummary& summary);

enum class Tail { above, below };

struct BetaPrior {
    double alpha = 1.0;
    double beta = 1.0;
};

/// Tail probability of the Beta(alpha + n_events, beta + m_effective)
/// posterior beyond `threshold`. Shape parameters may be fractional.
double posterior_tail(double n_events, double m_effective, BetaPrior prior, double threshold,
                      Tail direction);

}  // namespace tite_stein
