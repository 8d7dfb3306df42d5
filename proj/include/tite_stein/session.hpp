#pragma once

#include "tite_stein/config_io.hpp"
#include "tite_stein/decision.hpp"
#include "tite_stein/design.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tite_stein {

/// A request that contradicts the session's recorded history (out-of-order
/// time, changed duplicate, enrollment after termination, ...).
class conflict_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Finalization attempted while outcomes are still pending.
class pending_error : public std::runtime_error {
public:
    pending_error(const std::string& what, std::vector<std::string> patients)
        : std::runtime_error(what), patients_(std::move(patients)) {}

    const std::vector<std::string>& patients() const noexcept { return patients_; }

private:
    std::vector<std::string> patients_;
};

/// One calendar event. Times are in the design's time unit. Outcome events
/// record an observed DLT or response for an enrolled patient.
struct TrialEvent {
    enum class Type { enroll, toxicity, response };
    std::string id;
    Type type = Type::enroll;
    double time = 0.0;
    std::string patient;
    int dose = 0;  // enroll only

    /// Parses one event object; `path` prefixes config_error key paths.
    static TrialEvent from_json(const json& doc, const std::string& path);
    json to_json() const;
};

const char* to_string(TrialEvent::Type type);

enum class SessionStatus { enrolling, suspended, terminated, finalized };

const char* to_string(SessionStatus status);

/// Event-sourced live trial. All state derives from the record log, so
/// replaying the log rebuilds an identical session. Not thread-safe; the
/// service serializes access per session.
class TrialSession {
public:
    TrialSession(std::string id, const DesignParams& params, std::uint64_t seed = kDefaultSeed);

    /// Rebuilds a session from its records (the first must be "create").
    static TrialSession replay(const std::vector<json>& records);

    /// Reads a JSON-lines log written by a persisted session.
    static TrialSession load(const std::filesystem::path& file);

    /// Appends every later record to `file` (created if missing). The
    /// records so far are written first when the file is empty.
    void persist_to(const std::filesystem::path& file);

    /// Records `events` and evaluates the engine at `now`. Events whose id
    /// is already recorded with identical content are skipped; a request
    /// that adds nothing at an unchanged `now` leaves the log untouched.
    /// Invalid requests change nothing.
    const Decision& post(double now, const std::vector<TrialEvent>& events);

    /// Decision after applying `events` at `now` to a copy.
    Decision what_if(double now, const std::vector<TrialEvent>& events) const;

    /// Runs selection and verification on the complete data at `now`.
    /// Throws pending_error listing patients with unresolved outcomes.
    const FinalizeReport& finalize(double now);

    const std::string& id() const noexcept { return id_; }
    const DesignParams& params() const noexcept { return params_; }
    std::uint64_t seed() const noexcept { return seed_; }
    SessionStatus status() const noexcept;
    int current_dose() const noexcept { return current_; }
    std::optional<double> now() const noexcept { return now_; }
    int enrolled() const noexcept { return static_cast<int>(patients_.size()); }
    const std::optional<Decision>& decision() const noexcept { return decision_; }
    const std::optional<FinalizeReport>& final_report() const noexcept { return final_; }
    const std::vector<json>& records() const noexcept { return records_; }

    /// Per-dose states at the last evaluation time (flags only when the
    /// session has not been evaluated yet).
    std::vector<DoseState> dose_states() const;

    /// Complete-data counts; valid once nothing is pending.
    FinalData final_data() const;

    /// Full view served by GET /trials/{id}.
    json view() const;

private:
    struct Patient {
        std::string id;
        PatientRecord record;
        bool tox_seen = false;
        bool eff_seen = false;
    };

    void apply(const json& record);
    void apply_event(const TrialEvent& event);
    void evaluate(double now);
    void do_finalize(double now);
    void check_time(double t, const char* what) const;
    std::vector<PatientRecord> patient_records() const;
    void append(json record);

    std::string id_;
    DesignParams params_;
    std::uint64_t seed_;
    Boundaries boundaries_;
    std::vector<json> records_;
    std::vector<Patient> patients_;
    std::map<std::string, std::size_t> patient_index_;
    std::map<std::string, json> event_ids_;
    std::vector<DoseState> flags_;
    int current_;
    double last_time_ = 0.0;
    bool has_time_ = false;
    std::optional<double> now_;
    std::optional<Decision> decision_;
    bool terminated_ = false;
    std::optional<FinalizeReport> final_;
    std::filesystem::path file_;
};

}  // namespace tite_stein
