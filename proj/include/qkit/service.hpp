#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "qkit/json_io.hpp"

namespace httplib {
class Server;
}

namespace qkit {

struct ServiceConfig {
    std::uint64_t default_seed = 0;
    std::uint64_t memory_budget = kDefaultMemoryBudget;
    std::size_t snapshot_cap = 65536;
};

struct ServiceResponse {
    int status = 200;
    Json body;
};

/// Request handlers of the local JSON API. Each session is stepped under its
/// own lock; the session table has a separate one.
class Service {
public:
    explicit Service(ServiceConfig config = {});
    ~Service();

    ServiceResponse parse(const Json& request);
    ServiceResponse convert(const Json& request);
    ServiceResponse create_session(const Json& request);
    ServiceResponse step(const std::string& id);
    ServiceResponse run(const std::string& id);
    ServiceResponse remove(const std::string& id);
    ServiceResponse gates() const;

    std::size_t session_count() const;

    /// Registers every route on `server`.
    void bind(httplib::Server& server);

private:
    struct Session;
    std::shared_ptr<Session> find(const std::string& id) const;

    ServiceConfig config_;
    GateRegistry registry_;
    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::atomic<std::uint64_t> next_id_{1};
};

/// Blocks serving `service` on host:port until the server is stopped.
/// Throws ConfigError if the address cannot be bound.
void serve(Service& service, const std::string& host, int port);

}  // namespace qkit
