#include "tite_stein/interim.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>

namespace tite_stein {

const char* to_string(Endpoint endpoint) {
    return endpoint == Endpoint::toxicity ? "toxicity" : "efficacy";
}

double follow_up_weight(double elapsed, double window) {
    if (!(elapsed >= 0.0)) throw contract_error("follow_up_weight: elapsed time must be >= 0");
    if (!(window > 0.0)) throw contract_error("follow_up_weight: window must be > 0");
    return std::min(elapsed / window, 1.0);
}

double window_for(Endpoint endpoint, const DesignParams& params) noexcept {
    return endpoint == Endpoint::toxicity ? params.tox_window : params.eff_window;
}

InterimSummary summarize(std::span<const PatientRecord> patients, double now, Endpoint endpoint,
                         const DesignParams& params) {
    const double window = window_for(endpoint, params);
    InterimSummary s;
    for (const auto& p : patients) {
        const double elapsed = now - p.enroll_time;
        if (elapsed < 0.0) throw contract_error("summarize: patient enrolled after 'now'");
        ++s.n_patients;
        if (p.has_event(endpoint) && p.event_time(endpoint) <= elapsed) {
            ++s.n_events;
        } else if (!p.has_event(endpoint) && elapsed >= window) {
            ++s.m_complete;
            s.m_effective += 1.0;
        } else {
            // Either no event yet inside the window, or the latent event lies ahead.
            ++s.n_pending;
            s.m_effective += follow_up_weight(elapsed, window);
        }
    }
    return s;
}

double interim_estimate(const InterimSummary& summary) {
    const double denom = summary.n_events + summary.m_effective;
    if (!(denom > 0.0)) throw contract_error("interim_estimate: no information at this dose");
    return summary.n_events / denom;
}

double posterior_tail(double n_events, double m_effective, BetaPrior prior, double threshold,
                      Tail direction) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw contract_error("posterior_tail: threshold must lie in [0, 1]");
    }
    if (!(prior.alpha > 0.0 && prior.beta > 0.0)) {
        throw contract_error("posterior_tail: prior parameters must be positive");
    }
    if (!(n_events >= 0.0 && m_effective >= 0.0)) {
        throw contract_error("posterior_tail: counts must be non-negative");
    }
    const double a = prior.alpha + n_events;
    const double b = prior.beta + m_effective;
    if (threshold == 0.0) return direction == Tail::above ? 1.0 : 0.0;
    if (threshold == 1.0) return direction == Tail::above ? 0.0 : 1.0;
    return direction == Tail::above ? boost::math::ibetac(a, b, threshold)
                                    : boost::math::ibeta(a, b, threshold);
}

}  // namespace tite_stein
