#include "tite_stein/session.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace tite_stein {

namespace {

const json& require_key(const json& doc, const std::string& key, const std::string& path) {
    const auto it = doc.find(key);
    if (it == doc.end()) throw config_error(path + "." + key, "is required");
    return *it;
}

}  // namespace

const char* to_string(TrialEvent::Type type) {
    switch (type) {
    case TrialEvent::Type::enroll: return "enroll";
    case TrialEvent::Type::toxicity: return "toxicity";
    case TrialEvent::Type::response: return "response";
    }
    return "?";
}

const char* to_string(SessionStatus status) {
    switch (status) {
    case SessionStatus::enrolling: return "ENROLLING";
    case SessionStatus::suspended: return "SUSPENDED";
    case SessionStatus::terminated: return "TERMINATED";
    case SessionStatus::finalized: return "FINALIZED";
    }
    return "?";
}

TrialEvent TrialEvent::from_json(const json& doc, const std::string& path) {
    if (!doc.is_object()) throw config_error(path, "expected an object");
    static const std::set<std::string> known{"id", "type", "time", "patient", "dose"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.count(key)) throw config_error(path + "." + key, "unknown key");
    }
    TrialEvent e;
    const json& id = require_key(doc, "id", path);
    if (!id.is_string() || id.get<std::string>().empty()) throw config_error(path + ".id", "expected a non-empty string");
    e.id = id.get<std::string>();

    const json& type = require_key(doc, "type", path);
    const std::string t = type.is_string() ? type.get<std::string>() : "";
    if (t == "enroll") {
        e.type = Type::enroll;
    } else if (t == "toxicity") {
        e.type = Type::toxicity;
    } else if (t == "response") {
        e.type = Type::response;
    } else {
        throw config_error(path + ".type", "expected enroll, toxicity or response");
    }

    const json& time = require_key(doc, "time", path);
    if (!time.is_number() || !std::isfinite(time.get<double>()) || time.get<double>() < 0.0) {
        throw config_error(path + ".time", "expected a finite number >= 0");
    }
    e.time = time.get<double>();

    const json& patient = require_key(doc, "patient", path);
    if (!patient.is_string() || patient.get<std::string>().empty()) {
        throw config_error(path + ".patient", "expected a non-empty string");
    }
    e.patient = patient.get<std::string>();

    const auto dose = doc.find("dose");
    if (e.type == Type::enroll) {
        if (dose == doc.end()) throw config_error(path + ".dose", "is required for enroll events");
        if (!dose->is_number_integer()) throw config_error(path + ".dose", "expected an integer");
        e.dose = dose->get<int>();
    } else if (dose != doc.end()) {
        throw config_error(path + ".dose", "only enroll events carry a dose");
    }
    return e;
}

json TrialEvent::to_json() const {
    json out{{"id", id}, {"type", tite_stein::to_string(type)}, {"time", time}, {"patient", patient}};
    if (type == Type::enroll) out["dose"] = dose;
    return out;
}

TrialSession::TrialSession(std::string id, const DesignParams& params, std::uint64_t seed)
    : id_(std::move(id)), params_(params), seed_(seed), current_(params.start_dose) {
    params_.validate();
    boundaries_ = compute_boundaries(params_);
    flags_.assign(static_cast<std::size_t>(params_.num_doses), DoseState{});
    records_.push_back({{"type", "create"}, {"id", id_}, {"config", tite_stein::to_json(params_)}, {"seed", seed_}});
}

TrialSession TrialSession::replay(const std::vector<json>& records) {
    if (records.empty()) throw contract_error("replay: empty log");
    const json& head = records.front();
    if (!head.is_object() || head.value("type", "") != "create") {
        throw contract_error("replay: first record must be 'create'");
    }
    TrialSession s(head.at("id").get<std::string>(), design_from_json(head.at("config")),
                   head.at("seed").get<std::uint64_t>());
    for (std::size_t i = 1; i < records.size(); ++i) s.append(records[i]);
    return s;
}

TrialSession TrialSession::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::vector<json> records;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) records.push_back(json::parse(line));
    }
    TrialSession s = replay(records);
    s.file_ = file;
    return s;
}

void TrialSession::persist_to(const std::filesystem::path& file) {
    const bool fresh = !std::filesystem::exists(file) || std::filesystem::file_size(file) == 0;
    if (fresh) {
        std::ofstream out(file, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + file.string());
        for (const auto& r : records_) out << r.dump() << '\n';
        if (!out.flush()) throw std::runtime_error("cannot write " + file.string());
    }
    file_ = file;
}

void TrialSession::append(json record) {
    apply(record);
    records_.push_back(std::move(record));
}

void TrialSession::apply(const json& record) {
    const std::string type = record.value("type", "");
    if (type == "event") {
        apply_event(TrialEvent::from_json(record.at("event"), "event"));
    } else if (type == "evaluate") {
        evaluate(record.at("now").get<double>());
    } else if (type == "finalize") {
        do_finalize(record.at("now").get<double>());
    } else {
        throw contract_error("replay: unknown record type '" + type + "'");
    }
}

void TrialSession::check_time(double t, const char* what) const {
    if (!std::isfinite(t) || t < 0.0) throw config_error(what, "must be a finite number >= 0");
    if (has_time_ && t < last_time_) {
        throw conflict_error(std::string(what) + " " + std::to_string(t) +
                             " precedes the last recorded time " + std::to_string(last_time_));
    }
}

void TrialSession::apply_event(const TrialEvent& e) {
    if (final_) throw conflict_error("trial is finalized");
    check_time(e.time, "time");
    if (e.type == TrialEvent::Type::enroll) {
        if (terminated_) throw conflict_error("trial was terminated; no further enrollment");
        if (patient_index_.count(e.patient)) throw conflict_error("patient '" + e.patient + "' is already enrolled");
        if (e.dose < 1 || e.dose > params_.num_doses) throw config_error("dose", "out of range");
        if (enrolled() >= params_.max_sample_size()) throw conflict_error("maximum sample size reached");
        Patient p;
        p.id = e.patient;
        p.record.dose = e.dose;
        p.record.enroll_time = e.time;
        patient_index_[e.patient] = patients_.size();
        patients_.push_back(p);
        current_ = e.dose;
    } else {
        const auto it = patient_index_.find(e.patient);
        if (it == patient_index_.end()) throw config_error("patient", "unknown patient '" + e.patient + "'");
        Patient& p = patients_[it->second];
        const bool tox = e.type == TrialEvent::Type::toxicity;
        if (tox ? p.tox_seen : p.eff_seen) {
            throw conflict_error(std::string(to_string(e.type)) + " already recorded for patient '" + e.patient + "'");
        }
        const double elapsed = e.time - p.record.enroll_time;
        const double window = tox ? params_.tox_window : params_.eff_window;
        if (!(elapsed > 0.0 && elapsed <= window)) {
            throw config_error("time", "outcome must fall in (enrollment, enrollment + window]");
        }
        if (tox) {
            p.tox_seen = true;
            p.record.tox_event = true;
            p.record.tox_time = elapsed;
        } else {
            p.eff_seen = true;
            p.record.eff_event = true;
            p.record.eff_time = elapsed;
        }
    }
    event_ids_[e.id] = e.to_json();
    last_time_ = e.time;
    has_time_ = true;
}

std::vector<PatientRecord> TrialSession::patient_records() const {
    std::vector<PatientRecord> out;
    out.reserve(patients_.size());
    for (const auto& p : patients_) out.push_back(p.record);
    return out;
}

void TrialSession::evaluate(double now) {
    if (final_) throw conflict_error("trial is finalized");
    check_time(now, "now");
    now_ = now;
    last_time_ = now;
    has_time_ = true;
    if (terminated_) return;

    const auto states = build_dose_states(patient_records(), now, params_, flags_);
    if (!states[static_cast<std::size_t>(current_ - 1)].tried()) {
        Decision d;
        d.verdict = Verdict::stay;
        d.current_dose = current_;
        d.next_dose = current_;
        d.rationale.rule = "start";
        d.rationale.detail = "no patients at the current dose yet";
        d.rationale.boundaries = boundaries_;
        for (const auto& s : flags_) {
            d.eliminated_safety.push_back(s.eliminated_safety);
            d.eliminated_futility.push_back(s.eliminated_futility);
        }
        decision_ = d;
        return;
    }
    decision_ = next_dose(states, current_, boundaries_, params_);
    apply_eliminations(flags_, *decision_);
    if (decision_->verdict == Verdict::terminate) terminated_ = true;
}

const Decision& TrialSession::post(double now, const std::vector<TrialEvent>& events) {
    if (final_) throw conflict_error("trial is finalized");
    TrialSession next = *this;
    next.file_.clear();
    std::size_t added = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const TrialEvent& e = events[i];
        const std::string path = "events[" + std::to_string(i) + "]";
        if (e.time > now) throw config_error(path + ".time", "is later than now");
        const auto seen = next.event_ids_.find(e.id);
        if (seen != next.event_ids_.end()) {
            if (seen->second == e.to_json()) continue;
            throw conflict_error("event id '" + e.id + "' was already recorded with different content");
        }
        try {
            next.append({{"type", "event"}, {"event", e.to_json()}});
        } catch (const config_error& err) {
            const std::string what = err.what();
            throw config_error(path + "." + err.path(),
                               err.path().empty() ? what : what.substr(err.path().size() + 2));
        }
        ++added;
    }
    if (added > 0 || !next.now_ || now != *next.now_) {
        next.append({{"type", "evaluate"}, {"now", now}});
    }

    const std::size_t old_size = records_.size();
    if (!file_.empty() && next.records_.size() > old_size) {
        std::ofstream out(file_, std::ios::app);
        for (std::size_t i = old_size; i < next.records_.size(); ++i) out << next.records_[i].dump() << '\n';
        if (!out.flush()) throw std::runtime_error("cannot write " + file_.string());
    }
    next.file_ = file_;
    *this = std::move(next);
    return *decision_;
}

Decision TrialSession::what_if(double now, const std::vector<TrialEvent>& events) const {
    TrialSession copy = *this;
    copy.file_.clear();
    return copy.post(now, events);
}

void TrialSession::do_finalize(double now) {
    if (final_) throw conflict_error("trial is already finalized");
    check_time(now, "now");
    std::vector<std::string> pending;
    for (const auto& p : patients_) {
        const double elapsed = now - p.record.enroll_time;
        const bool tox_done = p.tox_seen || elapsed >= params_.tox_window;
        const bool eff_done = p.eff_seen || elapsed >= params_.eff_window;
        if (!tox_done || !eff_done) pending.push_back(p.id);
    }
    if (!pending.empty()) {
        throw pending_error(std::to_string(pending.size()) + " patient(s) have pending outcomes", pending);
    }
    if (patients_.empty()) throw conflict_error("no patients enrolled");
    FinalizeReport report = finalize_trial(final_data(), params_, seed_);
    if (terminated_) report.obd = 0;
    final_ = report;
    last_time_ = now;
    has_time_ = true;
}

const FinalizeReport& TrialSession::finalize(double now) {
    TrialSession next = *this;
    next.file_.clear();
    next.append({{"type", "finalize"}, {"now", now}});
    if (!file_.empty()) {
        std::ofstream out(file_, std::ios::app);
        out << next.records_.back().dump() << '\n';
        if (!out.flush()) throw std::runtime_error("cannot write " + file_.string());
    }
    next.file_ = file_;
    *this = std::move(next);
    return *final_;
}

SessionStatus TrialSession::status() const noexcept {
    if (final_) return SessionStatus::finalized;
    if (terminated_) return SessionStatus::terminated;
    if (decision_ && decision_->verdict == Verdict::suspend) return SessionStatus::suspended;
    return SessionStatus::enrolling;
}

std::vector<DoseState> TrialSession::dose_states() const {
    if (!now_) return flags_;
    return build_dose_states(patient_records(), std::max(*now_, last_time_), params_, flags_);
}

FinalData TrialSession::final_data() const {
    const auto n = static_cast<std::size_t>(params_.num_doses);
    FinalData d;
    d.n.assign(n, 0);
    d.y_tox.assign(n, 0);
    d.y_eff.assign(n, 0);
    d.eliminated.assign(n, false);
    for (const auto& p : patients_) {
        const auto i = static_cast<std::size_t>(p.record.dose - 1);
        ++d.n[i];
        d.y_tox[i] += p.tox_seen ? 1 : 0;
        d.y_eff[i] += p.eff_seen ? 1 : 0;
    }
    for (std::size_t i = 0; i < n; ++i) d.eliminated[i] = flags_[i].eliminated();
    return d;
}

json TrialSession::view() const {
    json doses = json::array();
    const auto states = dose_states();
    for (std::size_t d = 0; d < states.size(); ++d) {
        doses.push_back({{"dose", static_cast<int>(d) + 1},
                         {"toxicity", tite_stein::to_json(states[d].tox)},
                         {"efficacy", tite_stein::to_json(states[d].eff)},
                         {"eliminated_safety", states[d].eliminated_safety},
                         {"eliminated_futility", states[d].eliminated_futility}});
    }
    json patients = json::array();
    for (const auto& p : patients_) {
        patients.push_back({{"id", p.id},
                            {"dose", p.record.dose},
                            {"enroll_time", p.record.enroll_time},
                            {"toxicity_time", p.tox_seen ? json(p.record.enroll_time + p.record.tox_time) : json(nullptr)},
                            {"response_time", p.eff_seen ? json(p.record.enroll_time + p.record.eff_time) : json(nullptr)}});
    }
    return json{
        {"id", id_},
        {"status", to_string(status())},
        {"current_dose", current_},
        {"now", now_ ? json(*now_) : json(nullptr)},
        {"enrolled", enrolled()},
        {"max_sample_size", params_.max_sample_size()},
        {"accrual_complete", enrolled() >= params_.max_sample_size()},
        {"config", tite_stein::to_json(params_)},
        {"config_hash", config_hash(params_)},
        {"seed", seed_},
        {"boundaries", tite_stein::to_json(boundaries_)},
        {"doses", doses},
        {"patients", patients},
        {"decision", decision_ ? tite_stein::to_json(*decision_) : json(nullptr)},
        {"final_report", final_ ? tite_stein::to_json(*final_, params_, seed_) : json(nullptr)},
        {"record_count", records_.size()},
    };
}

}  // namespace tite_stein
