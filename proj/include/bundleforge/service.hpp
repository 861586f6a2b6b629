#ifndef BUNDLEFORGE_SERVICE_HPP
#define BUNDLEFORGE_SERVICE_HPP

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "bundleforge/core_model.hpp"
#include "bundleforge/pq_engine.hpp"

namespace httplib {
class Server;
}

namespace bundleforge::service {

/// Carries an HTTP status and the {code, message, detail} error body.
class ServiceError : public Error {
public:
    ServiceError(int status, std::string code, const std::string& message, nlohmann::json detail = nullptr)
        : Error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}
    int status() const { return status_; }
    const std::string& code() const { return code_; }
    const nlohmann::json& detail() const { return detail_; }
    nlohmann::json body() const;

private:
    int status_;
    std::string code_;
    nlohmann::json detail_;
};

struct ServiceOptions {
    std::optional<std::filesystem::path> persist_path;
    std::chrono::milliseconds relax_timeout{10000};
    EngineOptions engine;
};

struct Session;

/// In-memory session store. Mutations on one session are exclusive (a second
/// concurrent writer gets 409); reads return the last published snapshot.
class SessionManager {
public:
    explicit SessionManager(ServiceOptions options = {});
    ~SessionManager();

    nlohmann::json create(const nlohmann::json& body);
    nlohmann::json get(const std::string& id) const;
    nlohmann::json trace(const std::string& id) const;
    nlohmann::json set_slider(const std::string& id, const nlohmann::json& body);
    nlohmann::json set_bounds(const std::string& id, const nlohmann::json& body);
    nlohmann::json reset(const std::string& id, const nlohmann::json& body);

    /// Bounds obtained by rebuilding the session from its creation request and
    /// re-applying every history event.
    nlohmann::json replay_bounds(const std::string& id) const;

    std::vector<std::string> ids() const;
    std::size_t size() const;

    /// Writes every session (creation request + history) to the persist file.
    void save() const;
    /// Restores sessions from the persist file by replaying their history.
    void load();

    const ServiceOptions& options() const { return options_; }

private:
    std::shared_ptr<Session> find(const std::string& id) const;
    void persist() const;

    ServiceOptions options_;
    mutable std::shared_mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    mutable std::mutex persist_mu_;
};

/// Installs the JSON routes on `server`.
void register_routes(httplib::Server& server, SessionManager& manager);

}  // namespace bundleforge::service

#endif  // BUNDLEFORGE_SERVICE_HPP
