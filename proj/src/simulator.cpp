#include "tite_stein/simulator.hpp"

#include "tite_stein/verification.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <thread>

namespace tite_stein {

double TimeLaw::sample(double window, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = 1.0 - unit(rng);  // (0, 1]
    if (kind == Kind::uniform) return window * u;
    const double pick = unit(rng);
    double acc = 0.0;
    std::size_t k = 0;
    for (; k + 1 < masses.size(); ++k) {
        acc += masses[k];
        if (pick < acc) break;
    }
    const double lo = breaks[k];
    const double hi = breaks[k + 1];
    return window * (hi - (hi - lo) * (1.0 - u));
}

void TimeLaw::validate(const std::string& path) const {
    if (kind == Kind::uniform) return;
    if (masses.empty() || breaks.size() != masses.size() + 1) {
        throw config_error(path + ".breaks", "needs one more entry than masses");
    }
    if (breaks.front() != 0.0 || breaks.back() != 1.0) {
        throw config_error(path + ".breaks", "must start at 0 and end at 1");
    }
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        if (!(breaks[k] < breaks[k + 1])) throw config_error(path + ".breaks", "must be strictly increasing");
    }
    double total = 0.0;
    for (double m : masses) {
        if (!(m >= 0.0)) throw config_error(path + ".masses", "must be >= 0");
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-9) throw config_error(path + ".masses", "must sum to 1");
}

void Scenario::validate() const {
    if (p_tox.empty()) throw config_error("p_tox", "must list at least one dose");
    if (q_eff.size() != p_tox.size()) throw config_error("q_eff", "must have the same length as p_tox");
    for (std::size_t d = 0; d < p_tox.size(); ++d) {
        if (!(p_tox[d] >= 0.0 && p_tox[d] <= 1.0)) {
            throw config_error("p_tox[" + std::to_string(d) + "]", "must lie in [0, 1]");
        }
        if (!(q_eff[d] >= 0.0 && q_eff[d] <= 1.0)) {
            throw config_error("q_eff[" + std::to_string(d) + "]", "must lie in [0, 1]");
        }
        if (d > 0 && p_tox[d] < p_tox[d - 1]) throw config_error("p_tox", "must be non-decreasing");
    }
    if (true_obd < 0 || true_obd > num_doses()) throw config_error("true_obd", "out of range");
    if (!(time_units_per_month > 0.0)) throw config_error("time_units_per_month", "must be > 0");
    tox_law.validate("tox_law");
    eff_law.validate("eff_law");
}

double AccrualModel::next_gap(std::mt19937_64& rng) const {
    if (law == Law::fixed) return 1.0 / rate;
    std::exponential_distribution<double> gap(rate);
    return gap(rng);
}

void AccrualModel::validate() const {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw config_error("accrual.rate", "must be > 0");
}

PatientRecord sample_patient(const Scenario& scenario, int dose, const DesignParams& params,
                             std::mt19937_64& rng) {
    if (dose < 1 || dose > scenario.num_doses()) throw contract_error("sample_patient: dose out of range");
    const auto d = static_cast<std::size_t>(dose - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    PatientRecord p;
    p.dose = dose;
    p.tox_event = unit(rng) < scenario.p_tox[d];
    const double tox_time = scenario.tox_law.sample(params.tox_window, rng);
    p.eff_event = unit(rng) < scenario.q_eff[d];
    const double eff_time = scenario.eff_law.sample(params.eff_window, rng);
    if (p.tox_event) p.tox_time = tox_time;
    if (p.eff_event) p.eff_time = eff_time;
    return p;
}

namespace {

// Earliest outcome resolution strictly after `now`, nudged forward so that
// the rounding in (enroll + event) - enroll cannot leave it pending.
double next_resolution(const std::vector<PatientRecord>& patients, double now, const DesignParams& params) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : patients) {
        for (auto e : {Endpoint::toxicity, Endpoint::efficacy}) {
            const double r = p.resolution_time(e, window_for(e, params));
            if (r > now && r < best) best = r;
        }
    }
    return best + 1e-9 * std::max(1.0, std::abs(best));
}

}  // namespace

TrialResult run_trial(const DesignParams& params, const Scenario& scenario, const AccrualModel& accrual,
                      std::mt19937_64& rng) {
    if (scenario.num_doses() != params.num_doses) {
        throw config_error("num_doses", "scenario has " + std::to_string(scenario.num_doses()) +
                                            " doses, design has " + std::to_string(params.num_doses));
    }
    const Boundaries boundaries = compute_boundaries(params);
    const auto dose_count = static_cast<std::size_t>(params.num_doses);
    const int max_n = params.max_sample_size();

    TrialResult result;
    result.allocation.assign(dose_count, 0);
    std::vector<PatientRecord> patients;
    patients.reserve(static_cast<std::size_t>(max_n));
    std::vector<DoseState> flags(dose_count);

    int current = params.start_dose;
    double t = 0.0;
    auto enroll_cohort = [&](int dose) {
        for (int i = 0; i < params.cohort_size && result.enrolled < max_n; ++i) {
            if (i > 0) t += accrual.next_gap(rng);
            PatientRecord p = sample_patient(scenario, dose, params, rng);
            p.enroll_time = t;
            patients.push_back(p);
            ++result.allocation[static_cast<std::size_t>(dose - 1)];
            ++result.enrolled;
        }
    };

    auto follow_up_end = [&] {
        return std::max(t, patients.back().enroll_time + std::max(params.tox_window, params.eff_window));
    };

    enroll_cohort(current);
    while (result.enrolled < max_n) {
        t += accrual.next_gap(rng);
        auto evaluate = [&](double at) {
            const auto states = build_dose_states(patients, at, params, flags);
            return next_dose(states, current, boundaries, params);
        };
        Decision decision;
        for (;;) {
            decision = evaluate(t);
            apply_eliminations(flags, decision);
            result.trace.push_back({t, decision.verdict, current, decision.next_dose, decision.rationale.rule});
            if (decision.verdict != Verdict::suspend) break;
            // Patients who arrive while accrual is suspended are not enrolled;
            // the next arrival after the suspension lifts takes the decision.
            do {
                t = next_resolution(patients, t, params);
            } while (evaluate(t).verdict == Verdict::suspend);
            t += accrual.next_gap(rng);
        }
        if (decision.verdict == Verdict::terminate) {
            result.early_terminated = true;
            result.duration = follow_up_end();
            return result;
        }
        current = decision.next_dose;
        enroll_cohort(current);
    }
    result.duration = follow_up_end();

    FinalData data;
    data.n.assign(dose_count, 0);
    data.y_tox.assign(dose_count, 0);
    data.y_eff.assign(dose_count, 0);
    data.eliminated.assign(dose_count, false);
    for (const auto& p : patients) {
        const auto d = static_cast<std::size_t>(p.dose - 1);
        ++data.n[d];
        data.y_tox[d] += p.tox_event ? 1 : 0;
        data.y_eff[d] += p.eff_event ? 1 : 0;
    }
    for (std::size_t d = 0; d < dose_count; ++d) data.eliminated[d] = flags[d].eliminated();

    const std::uint64_t verify_seed = rng();
    const auto report = select_candidate(data, params);
    result.candidate = report.candidate;
    if (report.candidate == 0) return result;
    if (!params.verify.enabled) {
        result.selected = report.candidate;
        return result;
    }
    const auto check = verify(data, report.candidate, params, verify_seed);
    if (check.accepted) result.selected = report.candidate;
    return result;
}

std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t rep) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
    return std::mt19937_64(seq);
}

int default_thread_count() {
    if (const char* env = std::getenv("TITE_STEIN_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

OperatingCharacteristics summarize_results(const std::vector<TrialResult>& results, int num_doses,
                                           double time_units_per_month) {
    const auto dose_count = static_cast<std::size_t>(num_doses);
    const double n = static_cast<double>(results.size());
    OperatingCharacteristics oc;
    oc.reps = static_cast<int>(results.size());
    oc.selection_pct.assign(dose_count, 0.0);
    oc.selection_se.assign(dose_count, 0.0);
    oc.mean_allocation.assign(dose_count, 0.0);
    oc.allocation_se.assign(dose_count, 0.0);
    if (results.empty()) return oc;

    std::vector<double> alloc_sq(dose_count, 0.0);
    double none = 0.0, stopped = 0.0, dur = 0.0, dur_sq = 0.0;
    for (const auto& r : results) {
        if (r.selected == 0) {
            none += 1.0;
        } else {
            oc.selection_pct[static_cast<std::size_t>(r.selected - 1)] += 1.0;
        }
        stopped += r.early_terminated ? 1.0 : 0.0;
        for (std::size_t d = 0; d < dose_count; ++d) {
            oc.mean_allocation[d] += r.allocation[d];
            alloc_sq[d] += static_cast<double>(r.allocation[d]) * r.allocation[d];
        }
        const double months = r.duration / time_units_per_month;
        dur += months;
        dur_sq += months * months;
    }
    auto pct_se = [n](double share) { return 100.0 * std::sqrt(share * (1.0 - share) / n); };
    auto mean_se = [n](double sum, double sum_sq) {
        if (n < 2) return 0.0;
        const double mean = sum / n;
        return std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) / n);
    };
    for (std::size_t d = 0; d < dose_count; ++d) {
        const double share = oc.selection_pct[d] / n;
        oc.selection_pct[d] = 100.0 * share;
        oc.selection_se[d] = pct_se(share);
        oc.allocation_se[d] = mean_se(oc.mean_allocation[d], alloc_sq[d]);
        oc.mean_allocation[d] /= n;
    }
    oc.none_pct = 100.0 * none / n;
    oc.none_se = pct_se(none / n);
    oc.early_termination_pct = 100.0 * stopped / n;
    oc.mean_duration = dur / n;
    oc.duration_se = mean_se(dur, dur_sq);
    return oc;
}

OperatingCharacteristics operating_characteristics(const DesignParams& params, const Scenario& scenario,
                                                   const AccrualModel& accrual, int reps,
                                                   std::uint64_t seed, int threads) {
    if (reps < 1) throw contract_error("operating_characteristics: reps must be >= 1");
    params.validate();
    scenario.validate();
    accrual.validate();
    if (threads <= 0) threads = default_thread_count();
    threads = std::min(threads, reps);

    std::vector<TrialResult> results(static_cast<std::size_t>(reps));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto work = [&] {
        for (int rep = next++; rep < reps && !failed; rep = next++) {
            try {
                auto rng = replication_rng(seed, static_cast<std::uint64_t>(rep));
                results[static_cast<std::size_t>(rep)] = run_trial(params, scenario, accrual, rng);
                results[static_cast<std::size_t>(rep)].trace.clear();
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return summarize_results(results, params.num_doses, scenario.time_units_per_month);
}

int true_obd(const Scenario& scenario, const DesignParams& params) {
    int best = 0;
    double best_u = -std::numeric_limits<double>::infinity();
    for (int d = 1; d <= scenario.num_doses(); ++d) {
        const double p = scenario.p_tox[static_cast<std::size_t>(d - 1)];
        const double q = scenario.q_eff[static_cast<std::size_t>(d - 1)];
        if (p > params.pT_cap || q < params.qE_floor) continue;
        const double u = utility(p, q, params);
        if (u > best_u) {
            best_u = u;
            best = d;
        }
    }
    return best;
}

}  // namespace tite_stein
