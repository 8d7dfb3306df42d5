#include "tite_stein/decision.hpp"

#include <algorithm>
#include <cstdio>

namespace tite_stein {

const char* to_string(Verdict verdict) {
    switch (verdict) {
    case Verdict::stay: return "STAY";
    case Verdict::de_escalate: return "DE_ESCALATE";
    case Verdict::move_to: return "MOVE_TO";
    case Verdict::suspend: return "SUSPEND";
    case Verdict::eliminate_and_deescalate: return "ELIMINATE_AND_DEESCALATE";
    case Verdict::terminate: return "TERMINATE";
    }
    return "?";
}

const char* table_label(Verdict verdict) {
    switch (verdict) {
    case Verdict::stay: return "S";
    case Verdict::de_escalate: return "D";
    case Verdict::move_to: return "TBD";
    case Verdict::suspend: return "Pending";
    case Verdict::eliminate_and_deescalate: return "DU";
    case Verdict::terminate: return "ET";
    }
    return "?";
}

std::vector<DoseState> build_dose_states(std::span<const PatientRecord> patients, double now,
                                         const DesignParams& params,
                                         std::span<const DoseState> previous) {
    const auto dose_count = static_cast<std::size_t>(params.num_doses);
    if (!previous.empty() && previous.size() != dose_count) {
        throw contract_error("build_dose_states: previous state has wrong length");
    }
    std::vector<std::vector<PatientRecord>> by_dose(dose_count);
    for (const auto& p : patients) {
        if (p.dose < 1 || p.dose > params.num_doses) {
            throw contract_error("build_dose_states: patient dose out of range");
        }
        by_dose[static_cast<std::size_t>(p.dose - 1)].push_back(p);
    }
    std::vector<DoseState> states(dose_count);
    for (std::size_t d = 0; d < dose_count; ++d) {
        states[d].tox = summarize(by_dose[d], now, Endpoint::toxicity, params);
        states[d].eff = summarize(by_dose[d], now, Endpoint::efficacy, params);
        if (!previous.empty()) {
            states[d].eliminated_safety = previous[d].eliminated_safety;
            states[d].eliminated_futility = previous[d].eliminated_futility;
        }
    }
    return states;
}

void apply_eliminations(std::vector<DoseState>& doses, const Decision& decision) {
    for (std::size_t d = 0; d < doses.size() && d < decision.eliminated_safety.size(); ++d) {
        doses[d].eliminated_safety = decision.eliminated_safety[d];
        doses[d].eliminated_futility = decision.eliminated_futility[d];
    }
}

namespace {

std::string format(const char* fmt, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, fmt, a, b);
    return buf;
}

}  // namespace

Decision next_dose(std::span<const DoseState> doses, int current, const Boundaries& boundaries,
                   const DesignParams& params) {
    const int dose_count = static_cast<int>(doses.size());
    if (dose_count != params.num_doses) {
        throw contract_error("next_dose: state vector length differs from num_doses");
    }
    if (current < 1 || current > dose_count) throw contract_error("next_dose: current dose out of range");
    const DoseState& here = doses[static_cast<std::size_t>(current - 1)];
    if (here.tox.n_patients < 1) throw contract_error("next_dose: no patients at the current dose");

    Decision out;
    out.current_dose = current;
    out.next_dose = current;
    out.rationale.boundaries = boundaries;
    out.eliminated_safety.resize(doses.size());
    out.eliminated_futility.resize(doses.size());
    for (std::size_t d = 0; d < doses.size(); ++d) {
        out.eliminated_safety[d] = doses[d].eliminated_safety;
        out.eliminated_futility[d] = doses[d].eliminated_futility;
    }
    auto eliminated = [&](int dose) {
        const auto i = static_cast<std::size_t>(dose - 1);
        return out.eliminated_safety[i] || out.eliminated_futility[i];
    };
    auto allowed = [&](int dose) { return dose >= 1 && dose <= dose_count && !eliminated(dose); };
    auto finish = [&](Verdict verdict, int next, std::string rule, std::string detail) {
        out.verdict = verdict;
        out.next_dose = verdict == Verdict::terminate ? 0 : next;
        out.rationale.rule = std::move(rule);
        out.rationale.detail = std::move(detail);
        return out;
    };

    // 1. Accrual suspension.
    const int pending = std::max(here.tox.n_pending, here.eff.n_pending);
    out.rationale.pending_fraction = static_cast<double>(pending) / here.tox.n_patients;
    if (params.mode == Mode::complete) {
        int outstanding = 0;
        for (const auto& s : doses) outstanding += s.tox.n_pending + s.eff.n_pending;
        if (outstanding > 0) {
            return finish(Verdict::suspend, current, "pending",
                          "complete-data mode: " + std::to_string(outstanding) +
                              " outcome(s) outstanding");
        }
    } else if (out.rationale.pending_fraction > params.suspend_fraction) {
        return finish(Verdict::suspend, current, "pending",
                      format("pending fraction %.4g exceeds %.4g", out.rationale.pending_fraction,
                             params.suspend_fraction));
    }
    if (!(here.tox.n_events + here.tox.m_effective > 0.0) ||
        !(here.eff.n_events + here.eff.m_effective > 0.0)) {
        return finish(Verdict::suspend, current, "pending", "no follow-up information yet");
    }

    // 2. Elimination.
    out.rationale.safety_tail = posterior_tail(here.tox.n_events, here.tox.m_effective, kUniformPrior,
                                               params.elim.pi_T, Tail::above);
    out.rationale.futility_tail = posterior_tail(here.eff.n_events, here.eff.m_effective,
                                                 kUniformPrior, params.elim.pi_E, Tail::below);
    const bool unsafe = out.rationale.safety_tail > params.elim.c_T;
    if (unsafe) {
        for (int d = current; d <= dose_count; ++d) out.eliminated_safety[static_cast<std::size_t>(d - 1)] = true;
    }
    if (out.rationale.futility_tail > params.elim.c_E) {
        out.eliminated_futility[static_cast<std::size_t>(current - 1)] = true;
    }
    bool any_left = false;
    for (int d = 1; d <= dose_count; ++d) any_left = any_left || !eliminated(d);
    if (!any_left) return finish(Verdict::terminate, 0, "all_eliminated", "every dose has been eliminated");
    if (unsafe) {
        for (int d = current - 1; d >= 1; --d) {
            if (allowed(d)) {
                return finish(Verdict::eliminate_and_deescalate, d, "safety",
                              format("Pr(p > pi_T) = %.4f exceeds c_T = %.3g",
                                     out.rationale.safety_tail, params.elim.c_T));
            }
        }
        return finish(Verdict::terminate, 0, "safety", "no admissible dose below an unsafe dose");
    }

    // 3. Interval rules on the current dose.
    const double p = interim_estimate(here.tox);
    const double q = interim_estimate(here.eff);
    out.rationale.p_tilde = p;
    out.rationale.q_tilde = q;

    if (p >= boundaries.phi_U) {
        for (int d = current - 1; d >= 1; --d) {
            if (allowed(d)) {
                return finish(Verdict::de_escalate, d, "overly_toxic",
                              format("p = %.4f >= phi_U = %.4f", p, boundaries.phi_U));
            }
        }
        if (allowed(current)) {
            return finish(Verdict::stay, current, "overly_toxic",
                          format("p = %.4f >= phi_U = %.4f at the lowest available dose", p,
                                 boundaries.phi_U));
        }
        return finish(Verdict::terminate, 0, "no_admissible", "no dose available for de-escalation");
    }
    if (q >= boundaries.psi && allowed(current)) {
        return finish(Verdict::stay, current, "promising",
                      format("p = %.4f < phi_U and q = %.4f >= psi", p, q));
    }

    const bool wide = p <= boundaries.phi_L;
    std::vector<int> candidates{current - 1, current};
    if (wide) candidates.push_back(current + 1);
    int best = 0;
    double best_tail = -1.0;
    for (int d : candidates) {
        if (!allowed(d)) continue;
        const DoseState& s = doses[static_cast<std::size_t>(d - 1)];
        const double tail =
            posterior_tail(s.eff.n_events, s.eff.m_effective, kUniformPrior, boundaries.psi, Tail::above);
        out.rationale.admissible.push_back(d);
        out.rationale.admissible_tails.push_back(tail);
        if (tail >= best_tail) {  // ascending scan: ties go to the higher dose
            best_tail = tail;
            best = d;
        }
    }
    if (best == 0) {
        // Every admissible dose is eliminated but others remain: go to the
        // nearest remaining dose, lower first at equal distance.
        for (int gap = 1; gap < dose_count && best == 0; ++gap) {
            if (allowed(current - gap)) {
                best = current - gap;
            } else if (allowed(current + gap)) {
                best = current + gap;
            }
        }
        if (best == 0) return finish(Verdict::terminate, 0, "no_admissible", "no dose remains available");
        return finish(Verdict::move_to, best, "nearest_available",
                      format("admissible doses eliminated; p = %.4f, q = %.4f", p, q));
    }
    return finish(Verdict::move_to, best, "exploratory",
                  format(wide ? "p = %.4f <= phi_L, q = %.4f < psi" : "phi_L < p = %.4f < phi_U, q = %.4f < psi",
                         p, q));
}

}  // namespace tite_stein
