#pragma once

#include "tite_stein/config_io.hpp"
#include "tite_stein/session.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

namespace httplib {
class Server;
}

namespace tite_stein {

struct ServiceOptions {
    std::filesystem::path data_dir;  // empty keeps sessions in memory only
    std::string token;               // empty disables the bearer-token check
};

struct ServiceResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

/// Trial-conduct HTTP API. Routes:
///   GET  /trials                      session ids and statuses
///   POST /trials                      {"config": {...}, "seed": n}
///   GET  /trials/{id}                 session view
///   POST /trials/{id}/events          {"now": t, "events": [...]}
///   POST /trials/{id}/what-if         same body, nothing persisted
///   POST /trials/{id}/finalize        {"now": t}
///   GET  /trials/{id}/decision-table  ?n=3,6,9&format=json|csv|text
/// Errors are {"error": {"code", "message", "path"?}} with 400 (bad JSON),
/// 401 (token), 404 (unknown session or route), 409 (conflict with the
/// recorded history) or 422 (invalid payload).
class ConductService {
public:
    explicit ConductService(ServiceOptions options = {});

    /// Transport-independent entry point; `path` excludes the query string.
    ServiceResponse handle(const std::string& method, const std::string& path,
                           const std::map<std::string, std::string>& query, const std::string& body,
                           const std::string& authorization) const;

    /// Routes every GET / POST / OPTIONS request of `server` to handle().
    void mount(httplib::Server& server) const;

private:
    struct Slot {
        mutable std::mutex mutex;
        TrialSession session;
        explicit Slot(TrialSession s) : session(std::move(s)) {}
    };

    std::shared_ptr<Slot> find(const std::string& id) const;
    std::string next_id() const;

    ServiceResponse create(const json& body) const;
    ServiceResponse list() const;

    ServiceOptions options_;
    mutable std::shared_mutex sessions_mutex_;
    mutable std::map<std::string, std::shared_ptr<Slot>> sessions_;
    mutable long next_number_ = 1;
};

}  // namespace tite_stein
