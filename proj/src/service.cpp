#include "qkit/service.hpp"

#include <optional>

#include "httplib.h"

namespace qkit {

struct Service::Session {
    std::mutex mutex;
    std::unique_ptr<Executor> executor;
    std::optional<ExecutionTrace> trace;  // set once the program has finished
    std::size_t snapshot_cap = 0;
};

static ServiceResponse error_response(int status, const std::string& message, Json diagnostics = Json::array())
{
    return {status, {{"error", message}, {"diagnostics", std::move(diagnostics)}}};
}

static ServiceResponse diagnostics_response(const std::vector<Diagnostic>& diags)
{
    return error_response(400, "invalid program", diagnostics_to_json(diags));
}

static ServiceResponse runtime_error_response(const Error& e)
{
    const int status = e.kind() == ErrorKind::Resource ? 507 : 400;
    return {status,
            {{"error", e.what()},
             {"kind", to_string(e.kind())},
             {"line", e.line()},
             {"diagnostics", Json::array()}}};
}

static std::optional<std::string> string_field(const Json& request, const char* key)
{
    if (!request.is_object() || !request.contains(key) || !request[key].is_string())
        return std::nullopt;
    return request[key].get<std::string>();
}

static Json state_text(const QuantumState& state, std::size_t cap)
{
    if (state.nonzero_count() > cap)
        return nullptr;
    return render_state(state, StateFormat::Amplitudes);
}

Service::Service(ServiceConfig config) : config_(config), registry_(GateRegistry::builtin()) {}

Service::~Service() = default;

std::size_t Service::session_count() const
{
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) const
{
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

ServiceResponse Service::parse(const Json& request)
{
    const auto script = string_field(request, "script");
    if (!script)
        return error_response(400, "request needs a string field 'script'");
    auto result = parse_program(*script, registry_);
    if (!result.program)
        return diagnostics_response(result.diagnostics);
    return {200, program_to_json(*result.program)};
}

ServiceResponse Service::convert(const Json& request)
{
    if (const auto script = string_field(request, "script")) {
        auto result = parse_program(*script, registry_);
        if (!result.program)
            return diagnostics_response(result.diagnostics);
        return {200, {{"circuit", program_to_circuit(*result.program)}, {"script", emit(*result.program)}}};
    }
    if (request.is_object() && request.contains("circuit")) {
        auto conv = circuit_to_program(request["circuit"], registry_);
        if (!conv.program) {
            auto r = diagnostics_response(conv.diagnostics);
            r.body["locations"] = std::move(conv.locations);
            return r;
        }
        return {200, {{"script", conv.script}, {"circuit", program_to_circuit(*conv.program)}}};
    }
    return error_response(400, "request needs 'script' or 'circuit'");
}

ServiceResponse Service::create_session(const Json& request)
{
    const auto script = string_field(request, "script");
    if (!script)
        return error_response(400, "request needs a string field 'script'");
    auto result = parse_program(*script, registry_);
    if (!result.program)
        return diagnostics_response(result.diagnostics);

    ExecutionConfig config;
    config.seed = config_.default_seed;
    config.memory_budget = config_.memory_budget;
    config.snapshot_cap = config_.snapshot_cap;
    try {
        if (request.contains("seed")) {
            if (!request["seed"].is_number_unsigned() && !request["seed"].is_number_integer())
                return error_response(400, "'seed' must be an integer");
            config.seed = request["seed"].get<std::uint64_t>();
        }
        if (const auto mode = string_field(request, "mode"))
            config.mode = storage_mode_from_string(*mode);
        if (const auto m = string_field(request, "measurement"))
            config.measurement = measurement_mode_from_string(*m);
        auto session = std::make_shared<Session>();
        session->snapshot_cap = config.snapshot_cap;
        const std::size_t count = result.program->instructions.size();
        const int qubits = result.program->num_qubits;
        const int cbits = result.program->num_cbits;
        session->executor = std::make_unique<Executor>(std::move(*result.program), registry_, config);
        const std::string id = "s" + std::to_string(next_id_++);
        {
            std::lock_guard lock(sessions_mutex_);
            sessions_[id] = session;
        }
        return {201,
                {{"id", id},
                 {"instruction_count", count},
                 {"qubits", qubits},
                 {"cbits", cbits},
                 {"seed", config.seed},
                 {"mode", to_string(config.mode)}}};
    } catch (const ParseError& e) {
        return diagnostics_response(e.diagnostics());
    } catch (const Error& e) {
        return runtime_error_response(e);
    }
}

ServiceResponse Service::step(const std::string& id)
{
    auto session = find(id);
    if (!session)
        return error_response(404, "unknown session '" + id + "'");
    std::lock_guard lock(session->mutex);
    auto& ex = *session->executor;
    if (ex.done())
        return error_response(409, "session '" + id + "' has no instructions left");
    try {
        const auto& record = ex.step();
        Json body = {{"position", ex.position()},
                     {"done", ex.done()},
                     {"record", record_to_json(record)},
                     {"cbits", ex.cbits().to_string()}};
        if (const auto* state = ex.state()) {
            auto snap = make_snapshot(*state, session->snapshot_cap);
            snap.step = record.index;
            snap.line = record.line;
            snap.text = record.text;
            snap.cbits = ex.cbits();
            body["snapshot"] = snapshot_to_json(snap, state->num_qubits());
            body["bloch"] = body["snapshot"]["bloch"];
        }
        if (ex.done()) {
            session->trace = ex.finish();
            body["trace"] = trace_to_json(*session->trace);
        }
        return {200, std::move(body)};
    } catch (const Error& e) {
        return runtime_error_response(e);
    }
}

ServiceResponse Service::run(const std::string& id)
{
    auto session = find(id);
    if (!session)
        return error_response(404, "unknown session '" + id + "'");
    std::lock_guard lock(session->mutex);
    try {
        if (!session->trace)
            session->trace = session->executor->run();
        const auto& trace = *session->trace;
        Json body = trace_to_json(trace);
        body["done"] = true;
        body["state"] = trace.final_state ? state_text(*trace.final_state, session->snapshot_cap) : Json();
        body["output"] = format_run_output(trace, StateFormat::Amplitudes);
        return {200, std::move(body)};
    } catch (const Error& e) {
        return runtime_error_response(e);
    }
}

ServiceResponse Service::remove(const std::string& id)
{
    std::lock_guard lock(sessions_mutex_);
    if (sessions_.erase(id) == 0)
        return error_response(404, "unknown session '" + id + "'");
    return {200, {{"deleted", id}}};
}

ServiceResponse Service::gates() const { return {200, {{"gates", gates_to_json(registry_)}}}; }

// ---------------------------------------------------------------------------

static void reply(httplib::Response& res, const ServiceResponse& r)
{
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

static std::optional<Json> body_json(const httplib::Request& req, httplib::Response& res)
{
    auto j = Json::parse(req.body, nullptr, false);
    if (j.is_discarded()) {
        reply(res, error_response(400, "request body is not valid JSON"));
        return std::nullopt;
    }
    return j;
}

void Service::bind(httplib::Server& server)
{
    server.Post("/parse", [this](const httplib::Request& req, httplib::Response& res) {
        if (auto j = body_json(req, res))
            reply(res, parse(*j));
    });
    server.Post("/program", [this](const httplib::Request& req, httplib::Response& res) {
        if (auto j = body_json(req, res))
            reply(res, convert(*j));
    });
    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        if (auto j = body_json(req, res))
            reply(res, create_session(*j));
    });
    server.Post(R"(/sessions/([^/]+)/step)", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, step(req.matches[1]));
    });
    server.Post(R"(/sessions/([^/]+)/run)", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, run(req.matches[1]));
    });
    server.Delete(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, remove(req.matches[1]));
    });
    server.Get("/gates", [this](const httplib::Request&, httplib::Response& res) { reply(res, gates()); });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        reply(res, error_response(500, what));
    });
}

void serve(Service& service, const std::string& host, int port)
{
    httplib::Server server;
    service.bind(server);
    if (!server.bind_to_port(host, port))
        throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    server.listen_after_bind();
}

}  // namespace qkit
