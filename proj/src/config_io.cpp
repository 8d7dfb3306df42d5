#include "tite_stein/config_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace tite_stein {

namespace {

std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

const char* type_name(const json& value) { return value.type_name(); }

// Reads the keys of one JSON object and rejects any key nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
        if (!doc_.is_object()) {
            throw config_error(path_.empty() ? "$" : path_,
                               std::string("expected an object, got ") + type_name(doc_));
        }
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = doc_.find(key);
        return it == doc_.end() ? nullptr : &*it;
    }

    std::string path(const std::string& key) const { return join(path_, key); }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) out = as_number(*v, path(key));
    }

    void integer(const std::string& key, int& out) {
        if (const json* v = find(key)) out = as_int(*v, path(key));
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw config_error(path(key), std::string("expected a boolean, got ") + type_name(*v));
            out = v->get<bool>();
        }
    }

    void string(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw config_error(path(key), std::string("expected a string, got ") + type_name(*v));
            out = v->get<std::string>();
        }
    }

    template <typename T, typename F>
    void array(const std::string& key, std::vector<T>& out, F element) {
        if (const json* v = find(key)) {
            if (!v->is_array()) throw config_error(path(key), std::string("expected an array, got ") + type_name(*v));
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                out.push_back(element((*v)[i], path(key) + "[" + std::to_string(i) + "]"));
            }
        }
    }

    void require(const std::string& key) {
        if (doc_.find(key) == doc_.end()) throw config_error(path(key), "is required");
    }

    void finish() const {
        for (const auto& [key, value] : doc_.items()) {
            if (!seen_.count(key)) throw config_error(path(key), "unknown key");
        }
    }

    static double as_number(const json& v, const std::string& path) {
        if (!v.is_number()) throw config_error(path, std::string("expected a number, got ") + type_name(v));
        return v.get<double>();
    }

    static int as_int(const json& v, const std::string& path) {
        if (v.is_number_integer()) return v.get<int>();
        if (v.is_number_float()) {
            const double x = v.get<double>();
            if (std::floor(x) == x && std::abs(x) < 1e9) return static_cast<int>(x);
        }
        throw config_error(path, std::string("expected an integer, got ") + type_name(v));
    }

    static bool as_bool(const json& v, const std::string& path) {
        if (v.is_boolean()) return v.get<bool>();
        if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) return v.get<int>() == 1;
        throw config_error(path, std::string("expected a boolean, got ") + type_name(v));
    }

private:
    const json& doc_;
    std::string path_;
    std::set<std::string> seen_;
};

TimeLaw time_law_from_json(const json& doc, const std::string& path) {
    TimeLaw law;
    if (doc.is_string()) {
        if (doc.get<std::string>() != "uniform") throw config_error(path, "expected \"uniform\" or an object");
        return law;
    }
    ObjectReader r(doc, path);
    std::string kind = "uniform";
    r.string("kind", kind);
    if (kind == "uniform") {
        law.kind = TimeLaw::Kind::uniform;
    } else if (kind == "piecewise") {
        law.kind = TimeLaw::Kind::piecewise;
        r.require("breaks");
        r.require("masses");
        r.array("breaks", law.breaks, ObjectReader::as_number);
        r.array("masses", law.masses, ObjectReader::as_number);
    } else {
        throw config_error(r.path("kind"), "expected uniform or piecewise, got '" + kind + "'");
    }
    r.finish();
    return law;
}

json time_law_to_json(const TimeLaw& law) {
    if (law.kind == TimeLaw::Kind::uniform) return json{{"kind", "uniform"}};
    return json{{"kind", "piecewise"}, {"breaks", law.breaks}, {"masses", law.masses}};
}

// NaN and infinities become null.
json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json numbers_or_null(const std::vector<double>& xs) {
    json out = json::array();
    for (double x : xs) out.push_back(number_or_null(x));
    return out;
}

json bools(const std::vector<bool>& xs) {
    json out = json::array();
    for (bool x : xs) out.push_back(x);
    return out;
}

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

}  // namespace

json load_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw config_error(file.string(), "cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error(file.string(), std::string("invalid JSON: ") + e.what());
    }
}

DesignParams design_from_json(const json& doc) {
    DesignParams p;
    ObjectReader r(doc, "");
    r.integer("num_doses", p.num_doses);
    r.number("phi", p.phi);
    r.number("phi1", p.phi1);
    r.number("phi2", p.phi2);
    r.number("psi1", p.psi1);
    r.number("psi2", p.psi2);
    r.number("w1", p.w1);
    r.number("w2", p.w2);
    r.number("pT_cap", p.pT_cap);
    r.number("qE_floor", p.qE_floor);
    r.number("tox_window", p.tox_window);
    r.number("eff_window", p.eff_window);
    r.integer("cohort_size", p.cohort_size);
    r.integer("max_cohorts", p.max_cohorts);
    if (const json* e = r.find("elim")) {
        ObjectReader er(*e, "elim");
        er.number("pi_T", p.elim.pi_T);
        er.number("pi_E", p.elim.pi_E);
        er.number("c_T", p.elim.c_T);
        er.number("c_E", p.elim.c_E);
        er.finish();
    }
    r.number("suspend_fraction", p.suspend_fraction);
    if (const json* v = r.find("verify")) {
        ObjectReader vr(*v, "verify");
        vr.boolean("enabled", p.verify.enabled);
        vr.integer("M", p.verify.M);
        vr.number("U_B", p.verify.U_B);
        vr.number("p_min", p.verify.p_min);
        vr.number("alpha_T", p.verify.alpha_T);
        vr.number("beta_T", p.verify.beta_T);
        vr.number("alpha_E", p.verify.alpha_E);
        vr.number("beta_E", p.verify.beta_E);
        vr.finish();
    }
    std::string mode = to_string(p.mode);
    r.string("mode", mode);
    p.mode = mode_from_string(mode);
    r.integer("start_dose", p.start_dose);
    r.finish();
    p.validate();
    return p;
}

json to_json(const DesignParams& p) {
    return json{
        {"num_doses", p.num_doses},
        {"phi", p.phi},
        {"phi1", p.phi1},
        {"phi2", p.phi2},
        {"psi1", p.psi1},
        {"psi2", p.psi2},
        {"w1", p.w1},
        {"w2", p.w2},
        {"pT_cap", p.pT_cap},
        {"qE_floor", p.qE_floor},
        {"tox_window", p.tox_window},
        {"eff_window", p.eff_window},
        {"cohort_size", p.cohort_size},
        {"max_cohorts", p.max_cohorts},
        {"elim", {{"pi_T", p.elim.pi_T}, {"pi_E", p.elim.pi_E}, {"c_T", p.elim.c_T}, {"c_E", p.elim.c_E}}},
        {"suspend_fraction", p.suspend_fraction},
        {"verify",
         {{"enabled", p.verify.enabled},
          {"M", p.verify.M},
          {"U_B", p.verify.U_B},
          {"p_min", p.verify.p_min},
          {"alpha_T", p.verify.alpha_T},
          {"beta_T", p.verify.beta_T},
          {"alpha_E", p.verify.alpha_E},
          {"beta_E", p.verify.beta_E}}},
        {"mode", to_string(p.mode)},
        {"start_dose", p.start_dose},
    };
}

ScenarioDocument scenario_from_json(const json& doc) {
    ScenarioDocument out;
    Scenario& s = out.scenario;
    ObjectReader r(doc, "");
    r.string("name", s.name);
    r.require("p_tox");
    r.require("q_eff");
    r.array("p_tox", s.p_tox, ObjectReader::as_number);
    r.array("q_eff", s.q_eff, ObjectReader::as_number);
    if (const json* v = r.find("tox_law")) s.tox_law = time_law_from_json(*v, "tox_law");
    if (const json* v = r.find("eff_law")) s.eff_law = time_law_from_json(*v, "eff_law");
    r.integer("true_obd", s.true_obd);
    r.number("time_units_per_month", s.time_units_per_month);
    if (const json* a = r.find("accrual")) {
        ObjectReader ar(*a, "accrual");
        ar.number("rate", out.accrual.rate);
        std::string law = "exponential";
        ar.string("law", law);
        if (law == "exponential") {
            out.accrual.law = AccrualModel::Law::exponential;
        } else if (law == "fixed") {
            out.accrual.law = AccrualModel::Law::fixed;
        } else {
            throw config_error("accrual.law", "expected exponential or fixed, got '" + law + "'");
        }
        ar.finish();
    }
    r.finish();
    s.validate();
    out.accrual.validate();
    return out;
}

json to_json(const Scenario& s, const AccrualModel& accrual) {
    return json{
        {"name", s.name},
        {"p_tox", s.p_tox},
        {"q_eff", s.q_eff},
        {"tox_law", time_law_to_json(s.tox_law)},
        {"eff_law", time_law_to_json(s.eff_law)},
        {"true_obd", s.true_obd},
        {"time_units_per_month", s.time_units_per_month},
        {"accrual",
         {{"rate", accrual.rate}, {"law", accrual.law == AccrualModel::Law::exponential ? "exponential" : "fixed"}}},
    };
}

FinalData final_data_from_json(const json& doc) {
    FinalData d;
    ObjectReader r(doc, "");
    r.require("n");
    r.require("y_tox");
    r.require("y_eff");
    r.array("n", d.n, ObjectReader::as_int);
    r.array("y_tox", d.y_tox, ObjectReader::as_int);
    r.array("y_eff", d.y_eff, ObjectReader::as_int);
    d.eliminated.assign(d.n.size(), false);
    r.array("eliminated", d.eliminated, ObjectReader::as_bool);
    r.finish();
    if (d.y_tox.size() != d.n.size()) throw config_error("y_tox", "must have the same length as n");
    if (d.y_eff.size() != d.n.size()) throw config_error("y_eff", "must have the same length as n");
    if (d.eliminated.size() != d.n.size()) throw config_error("eliminated", "must have the same length as n");
    for (std::size_t i = 0; i < d.n.size(); ++i) {
        const std::string at = "[" + std::to_string(i) + "]";
        if (d.n[i] < 0) throw config_error("n" + at, "must be >= 0");
        if (d.y_tox[i] < 0 || d.y_tox[i] > d.n[i]) throw config_error("y_tox" + at, "must lie in [0, n]");
        if (d.y_eff[i] < 0 || d.y_eff[i] > d.n[i]) throw config_error("y_eff" + at, "must lie in [0, n]");
    }
    if (d.n.empty()) throw config_error("n", "must list at least one dose");
    return d;
}

json to_json(const FinalData& d) {
    const std::vector<bool> eliminated = d.eliminated.empty() ? std::vector<bool>(d.n.size(), false) : d.eliminated;
    return json{{"n", d.n}, {"y_tox", d.y_tox}, {"y_eff", d.y_eff}, {"eliminated", bools(eliminated)}};
}

json to_json(const Boundaries& b) {
    return json{{"phi_L", b.phi_L}, {"phi_U", b.phi_U}, {"psi", b.psi}};
}

json to_json(const InterimSummary& s) {
    return json{{"n_patients", s.n_patients},
                {"n_events", s.n_events},
                {"m_complete", s.m_complete},
                {"m_effective", s.m_effective},
                {"n_pending", s.n_pending}};
}

json to_json(const Decision& d) {
    const Rationale& r = d.rationale;
    return json{
        {"verdict", to_string(d.verdict)},
        {"label", table_label(d.verdict)},
        {"current_dose", d.current_dose},
        {"next_dose", d.next_dose},
        {"eliminated_safety", bools(d.eliminated_safety)},
        {"eliminated_futility", bools(d.eliminated_futility)},
        {"rationale",
         {{"rule", r.rule},
          {"detail", r.detail},
          {"pending_fraction", number_or_null(r.pending_fraction)},
          {"p_tilde", number_or_null(r.p_tilde)},
          {"q_tilde", number_or_null(r.q_tilde)},
          {"safety_tail", number_or_null(r.safety_tail)},
          {"futility_tail", number_or_null(r.futility_tail)},
          {"boundaries", to_json(r.boundaries)},
          {"admissible", r.admissible},
          {"admissible_tails", numbers_or_null(r.admissible_tails)}}},
    };
}

json to_json(const SelectionReport& s) {
    return json{{"p_tilde", numbers_or_null(s.p_tilde)},
                {"q_tilde", numbers_or_null(s.q_tilde)},
                {"model_weights", numbers_or_null(s.model_weights)},
                {"utilities", numbers_or_null(s.utilities)},
                {"eligible", bools(s.eligible)},
                {"candidate", s.candidate}};
}

json to_json(const VerificationReport& v) {
    return json{{"candidate", v.candidate},
                {"p_g", v.p_g},
                {"accepted", v.accepted},
                {"M", v.M},
                {"U_B", v.U_B},
                {"p_min", v.p_min},
                {"utility_mean", v.utility_mean},
                {"utility_q05", v.utility_q05},
                {"utility_q50", v.utility_q50},
                {"utility_q95", v.utility_q95}};
}

json to_json(std::span<const DecisionTableRow> rows) {
    json out = json::array();
    for (const auto& r : rows) {
        if (r.pending_rule) {
            out.push_back({{"n_d", r.n_d}, {"decision", "Pending"}, {"pending_cutoff", r.pending_cutoff}});
            continue;
        }
        const bool eff_free = r.decision == "D" || r.decision == "DU";
        out.push_back({{"n_d", r.n_d},
                       {"n_tox", r.tox_count.text()},
                       {"m_tox", r.tox_bound.text()},
                       {"n_eff", eff_free ? "Any" : r.eff_count.text()},
                       {"m_eff", eff_free ? "" : r.eff_bound.text()},
                       {"decision", r.decision}});
    }
    return out;
}

std::string config_hash(const DesignParams& params) {
    const std::string text = to_json(params).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

FinalizeReport finalize_trial(const FinalData& data, const DesignParams& params, std::uint64_t seed) {
    FinalizeReport out;
    out.selection = select_candidate(data, params);
    if (out.selection.candidate == 0) return out;
    if (!params.verify.enabled) {
        out.obd = out.selection.candidate;
        return out;
    }
    out.verified = true;
    out.verification = verify(data, out.selection.candidate, params, seed);
    if (out.verification.accepted) out.obd = out.selection.candidate;
    return out;
}

json to_json(const FinalizeReport& report, const DesignParams& params, std::uint64_t seed) {
    return json{{"config_hash", config_hash(params)},
                {"seed", seed},
                {"selection", to_json(report.selection)},
                {"verification", report.verified ? to_json(report.verification) : json(nullptr)},
                {"obd", report.obd}};
}

json oc_to_json(const OperatingCharacteristics& oc, const Scenario& scenario, const DesignParams& params,
                std::uint64_t seed) {
    return json{{"scenario", scenario.name},
                {"config_hash", config_hash(params)},
                {"seed", seed},
                {"mode", to_string(params.mode)},
                {"reps", oc.reps},
                {"true_obd", scenario.true_obd},
                {"selection_pct", oc.selection_pct},
                {"selection_se", oc.selection_se},
                {"none_pct", oc.none_pct},
                {"none_se", oc.none_se},
                {"early_termination_pct", oc.early_termination_pct},
                {"mean_allocation", oc.mean_allocation},
                {"allocation_se", oc.allocation_se},
                {"mean_duration", oc.mean_duration},
                {"duration_se", oc.duration_se}};
}

std::string oc_csv_header(int num_doses) {
    std::ostringstream os;
    os << "scenario,mode,reps,seed,config_hash";
    for (int d = 1; d <= num_doses; ++d) os << ",sel_DL" << d;
    os << ",ET";
    for (int d = 1; d <= num_doses; ++d) os << ",N_DL" << d;
    os << ",duration";
    for (int d = 1; d <= num_doses; ++d) os << ",se_sel_DL" << d;
    os << ",se_ET";
    for (int d = 1; d <= num_doses; ++d) os << ",se_N_DL" << d;
    os << ",se_duration";
    return os.str();
}

std::string oc_csv_row(const OperatingCharacteristics& oc, const Scenario& scenario,
                       const DesignParams& params, std::uint64_t seed) {
    std::ostringstream os;
    os << scenario.name << ',' << to_string(params.mode) << ',' << oc.reps << ',' << seed << ','
       << config_hash(params);
    for (double x : oc.selection_pct) os << ',' << fixed(x, 1);
    os << ',' << fixed(oc.none_pct, 1);
    for (double x : oc.mean_allocation) os << ',' << fixed(x, 1);
    os << ',' << fixed(oc.mean_duration, 1);
    for (double x : oc.selection_se) os << ',' << fixed(x, 2);
    os << ',' << fixed(oc.none_se, 2);
    for (double x : oc.allocation_se) os << ',' << fixed(x, 2);
    os << ',' << fixed(oc.duration_se, 2);
    return os.str();
}

}  // namespace tite_stein
