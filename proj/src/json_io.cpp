#include "qkit/json_io.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace qkit {

Json diagnostics_to_json(const std::vector<Diagnostic>& diagnostics)
{
    Json out = Json::array();
    for (const auto& d : diagnostics)
        out.push_back({{"line", d.line},
                       {"severity", d.severity == Severity::Error ? "error" : "warning"},
                       {"message", d.message},
                       {"token", d.token},
                       {"text", d.to_string()}});
    return out;
}

static const char* kind_name(InstructionKind kind)
{
    switch (kind) {
    case InstructionKind::AddQubits: return "AddQubits";
    case InstructionKind::AddCbits: return "AddCbits";
    case InstructionKind::GateOp: return "GateOp";
    case InstructionKind::Measure: return "Measure";
    }
    return "?";
}

static Json items_to_json(const std::vector<TargetItem>& items)
{
    Json out = Json::array();
    for (const auto& t : items) {
        if (t.range)
            out.push_back(t.to_string());
        else
            out.push_back(t.lo);
    }
    return out;
}

static Json params_to_json(const std::vector<Param>& params)
{
    Json out = Json::object();
    for (const auto& p : params)
        out[p.key] = p.value.to_string();
    return out;
}

static Json custom_gates_to_json(const std::vector<CustomGateDef>& defs)
{
    Json out = Json::array();
    for (const auto& def : defs) {
        Json g = {{"name", def.name}, {"qubits", def.num_qubits}};
        if (def.form == CustomGateDef::Form::Matrix) {
            g["form"] = "matrix";
            Json m = Json::array();
            for (const auto& a : def.matrix)
                m.push_back({a.real(), a.imag()});
            g["matrix"] = std::move(m);
        } else {
            g["form"] = "perm";
            g["images"] = def.table;
        }
        out.push_back(std::move(g));
    }
    return out;
}

Json program_to_json(const Program& program)
{
    Json instructions = Json::array();
    for (const auto& instr : program.instructions) {
        Json j = {{"line", instr.line}, {"kind", kind_name(instr.kind)}, {"text", emit_instruction(instr)}};
        if (instr.kind == InstructionKind::AddQubits || instr.kind == InstructionKind::AddCbits) {
            j["count"] = instr.count;
        } else {
            if (instr.kind == InstructionKind::GateOp)
                j["gate"] = instr.gate;
            j["targets"] = items_to_json(instr.items);
            j["qubits"] = instr.quantum_targets();
            j["cbits"] = instr.classical_targets();
            j["params"] = params_to_json(instr.params);
        }
        instructions.push_back(std::move(j));
    }
    return {{"qubits", program.num_qubits},
            {"cbits", program.num_cbits},
            {"instruction_count", program.instructions.size()},
            {"instructions", std::move(instructions)},
            {"gates", custom_gates_to_json(program.custom_gates)},
            {"script", emit(program)}};
}

Json program_to_circuit(const Program& program)
{
    Json declarations = Json::array();
    Json columns = Json::array();
    Json column_ops = Json::array();
    std::set<std::pair<bool, std::uint64_t>> used;

    auto flush = [&] {
        if (!column_ops.empty())
            columns.push_back({{"ops", std::move(column_ops)}});
        column_ops = Json::array();
        used.clear();
    };

    for (const auto& instr : program.instructions) {
        if (instr.kind == InstructionKind::AddQubits) {
            declarations.push_back("qubits");
            continue;
        }
        if (instr.kind == InstructionKind::AddCbits) {
            declarations.push_back("cbits");
            continue;
        }
        std::set<std::pair<bool, std::uint64_t>> touched;
        for (const auto& t : instr.targets)
            touched.emplace(t.classical, t.resolved);
        const bool clash = std::any_of(touched.begin(), touched.end(), [&](const auto& k) { return used.count(k); });
        if (clash)
            flush();
        used.insert(touched.begin(), touched.end());
        Json op = {{"gate", instr.kind == InstructionKind::Measure ? std::string("Measure") : instr.gate},
                   {"targets", items_to_json(instr.items)}};
        if (!instr.params.empty())
            op["params"] = params_to_json(instr.params);
        column_ops.push_back(std::move(op));
    }
    flush();

    Json out = {{"qubits", program.num_qubits},
                {"cbits", program.num_cbits},
                {"declarations", std::move(declarations)},
                {"columns", std::move(columns)}};
    if (!program.custom_gates.empty())
        out["gates"] = custom_gates_to_json(program.custom_gates);
    return out;
}

// ---------------------------------------------------------------------------
// Circuit -> script. Every field is checked to be a single token before it is
// spliced into the text, so the parser sees exactly one command per op.

static bool is_identifier(const std::string& s)
{
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
        return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

static bool is_token(const std::string& s)
{
    return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == '#' || c == ',' || c == '=';
    });
}

namespace {

struct CircuitReader {
    const GateRegistry& registry;
    std::vector<Diagnostic> diags;
    std::vector<std::string> lines;
    Json locations = Json::array();

    void fail(const std::string& message, const std::string& token = {})
    {
        diags.push_back({0, Severity::Error, message, token});
    }

    void add_line(std::string text, Json where)
    {
        lines.push_back(std::move(text));
        where["line"] = static_cast<int>(lines.size());
        locations.push_back(std::move(where));
    }

    std::optional<int> count(const Json& c, const char* key)
    {
        if (!c.contains(key))
            return 0;
        const auto& v = c[key];
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || v.get<std::int64_t>() > 1 << 20) {
            fail(std::string("'") + key + "' must be a non-negative integer", v.dump());
            return std::nullopt;
        }
        return v.get<int>();
    }

    std::string targets(const Json& t, const std::string& where)
    {
        if (!t.is_array() || t.empty()) {
            fail(where + ": 'targets' must be a non-empty array");
            return {};
        }
        std::string out;
        for (const auto& item : t) {
            std::string s;
            if (item.is_number_integer())
                s = std::to_string(item.get<std::int64_t>());
            else if (item.is_string())
                s = item.get<std::string>();
            if (s.empty() || !is_token(s) ||
                s.find_first_not_of("-0123456789:") != std::string::npos) {
                fail(where + ": target must be an integer or \"lo:hi\"", item.dump());
                return {};
            }
            if (!out.empty())
                out += ",";
            out += s;
        }
        return out;
    }

    // Keys come back sorted from the JSON object; emit them in the gate's
    // declared order so the script matches the canonical text.
    std::string params(const std::string& gate, const Json& p, const std::string& where)
    {
        std::string out;
        if (p.is_null())
            return out;
        if (!p.is_object()) {
            fail(where + ": 'params' must be an object");
            return out;
        }
        std::vector<std::string> keys;
        if (const auto* def = registry.find(gate))
            for (const auto& k : def->params)
                if (p.contains(k))
                    keys.push_back(k);
        for (const auto& [key, value] : p.items())
            if (std::find(keys.begin(), keys.end(), key) == keys.end())
                keys.push_back(key);
        for (const auto& key : keys) {
            const auto& value = p[key];
            std::string v;
            if (value.is_string())
                v = value.get<std::string>();
            else if (value.is_number_integer())
                v = std::to_string(value.get<std::int64_t>());
            else if (value.is_number())
                v = ParamValue::real(value.get<double>()).to_string();
            if (!is_identifier(key) || !is_token(v)) {
                fail(where + ": bad parameter", key + "=" + value.dump());
                continue;
            }
            out += " " + key + "=" + v;
        }
        return out;
    }

    void gate_def(const Json& g, std::size_t index)
    {
        const std::string where = "gates[" + std::to_string(index) + "]";
        if (!g.is_object() || !g.contains("name") || !g["name"].is_string() ||
            !is_identifier(g["name"].get<std::string>())) {
            fail(where + ": 'name' must be an identifier");
            return;
        }
        const auto form = g.value("form", std::string());
        const auto k = g.contains("qubits") && g["qubits"].is_number_integer() ? g["qubits"].get<int>() : -1;
        if (k < 1 || k > 10) {
            fail(where + ": 'qubits' must be in [1, 10]");
            return;
        }
        std::string text = "DefGate " + g["name"].get<std::string>();
        if (form == "matrix") {
            const auto& m = g.value("matrix", Json::array());
            text += " matrix " + std::to_string(k);
            for (const auto& e : m) {
                if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
                    fail(where + ": matrix entries must be [re, im] pairs", e.dump());
                    return;
                }
                text += " " + ParamValue::real(e[0].get<double>()).to_string() + " " +
                        ParamValue::real(e[1].get<double>()).to_string();
            }
        } else if (form == "perm") {
            const auto& images = g.value("images", Json::array());
            text += " perm " + std::to_string(k);
            for (const auto& e : images) {
                if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<std::int64_t>() >= 0)) {
                    fail(where + ": images must be non-negative integers", e.dump());
                    return;
                }
                text += " " + std::to_string(e.get<std::uint64_t>());
            }
        } else {
            fail(where + ": 'form' must be \"matrix\" or \"perm\"", form);
            return;
        }
        add_line(std::move(text), {{"gate_def", index}});
    }

    void run(const Json& c)
    {
        if (!c.is_object()) {
            fail("circuit must be a JSON object");
            return;
        }
        const auto nq = count(c, "qubits");
        const auto nc = count(c, "cbits");
        if (!nq || !nc)
            return;

        if (c.contains("gates")) {
            if (!c["gates"].is_array())
                return fail("'gates' must be an array");
            for (std::size_t i = 0; i < c["gates"].size(); ++i)
                gate_def(c["gates"][i], i);
        }

        std::vector<std::string> order;
        if (c.contains("declarations")) {
            if (!c["declarations"].is_array())
                return fail("'declarations' must be an array");
            for (const auto& d : c["declarations"]) {
                const auto s = d.is_string() ? d.get<std::string>() : std::string();
                if (s != "qubits" && s != "cbits")
                    return fail("declarations must be \"qubits\" or \"cbits\"", d.dump());
                order.push_back(s);
            }
        } else {
            if (*nq > 0)
                order.push_back("qubits");
            if (*nc > 0)
                order.push_back("cbits");
        }
        for (const auto& d : order)
            add_line(d == "qubits" ? "AddQubits " + std::to_string(*nq) : "AddCbits " + std::to_string(*nc),
                     {{"declaration", d}});

        const auto& columns = c.value("columns", Json::array());
        if (!columns.is_array())
            return fail("'columns' must be an array");
        for (std::size_t ci = 0; ci < columns.size(); ++ci) {
            const auto& col = columns[ci];
            const Json ops = col.is_object() ? col.value("ops", Json::array()) : Json();
            if (!ops.is_array()) {
                fail("columns[" + std::to_string(ci) + "]: 'ops' must be an array");
                continue;
            }
            for (std::size_t oi = 0; oi < ops.size(); ++oi) {
                const auto& op = ops[oi];
                const std::string where = "columns[" + std::to_string(ci) + "].ops[" + std::to_string(oi) + "]";
                if (!op.is_object() || !op.contains("gate") || !op["gate"].is_string() ||
                    !is_identifier(op["gate"].get<std::string>())) {
                    fail(where + ": 'gate' must be a gate name");
                    continue;
                }
                const auto gate = op["gate"].get<std::string>();
                const auto t = targets(op.value("targets", Json()), where);
                if (t.empty())
                    continue;
                const auto p = params(gate, op.value("params", Json()), where);
                std::string text = gate == "Measure" ? "Measure " + t : "GateOp " + gate + " " + t;
                if (gate == "Measure" && !p.empty()) {
                    fail(where + ": Measure takes no parameters");
                    continue;
                }
                add_line(text + p, {{"column", ci}, {"op", oi}});
            }
        }
    }
};

}  // namespace

CircuitConversion circuit_to_program(const Json& circuit, const GateRegistry& base)
{
    CircuitReader reader{base};
    reader.run(circuit);
    CircuitConversion out;
    out.locations = std::move(reader.locations);
    if (!reader.diags.empty()) {
        out.diagnostics = std::move(reader.diags);
        return out;
    }
    for (const auto& l : reader.lines)
        out.script += l + "\n";
    auto parsed = parse_program(out.script, base);
    out.diagnostics = std::move(parsed.diagnostics);
    if (parsed.program) {
        out.script = emit(*parsed.program);
        out.program = std::move(parsed.program);
    }
    return out;
}

// ---------------------------------------------------------------------------

Json bloch_to_json(const BlochVector& b) { return {{"x", b.x}, {"y", b.y}, {"z", b.z}}; }

Json outcome_to_json(const MeasurementOutcome& o)
{
    return {{"qubits", o.qubits},
            {"bits", o.bits},
            {"bitstring", o.bitstring()},
            {"value", o.qubits.size() <= 64 ? Json(o.value()) : Json()},
            {"probability", o.probability}};
}

Json snapshot_to_json(const StateSnapshot& s, int num_qubits)
{
    Json bloch = Json::array();
    for (const auto& b : s.bloch)
        bloch.push_back(bloch_to_json(b));
    Json top = Json::array();
    for (const auto& [i, p] : s.top_probabilities)
        top.push_back({{"index", i}, {"bits", basis_bitstring(i, num_qubits)}, {"probability", p}});
    Json out = {{"step", s.step},
                {"line", s.line},
                {"text", s.text},
                {"nonzero_count", s.nonzero_count},
                {"summary", !s.full},
                {"top_probabilities", std::move(top)},
                {"bloch", std::move(bloch)},
                {"cbits", s.cbits.to_string()}};
    if (s.full) {
        Json entries = Json::array();
        for (const auto& [i, a] : s.entries)
            entries.push_back({{"index", i},
                               {"bits", basis_bitstring(i, num_qubits)},
                               {"re", a.real()},
                               {"im", a.imag()},
                               {"probability", abs2(a)}});
        out["amplitudes"] = std::move(entries);
    }
    return out;
}

Json record_to_json(const InstructionRecord& r)
{
    Json out = {{"index", r.index},
                {"line", r.line},
                {"text", r.text},
                {"bucket", r.bucket},
                {"seconds", r.seconds},
                {"stored_entries", r.stored_entries}};
    if (r.outcome)
        out["outcome"] = outcome_to_json(*r.outcome);
    return out;
}

Json buckets_to_json(const std::vector<TimingBucket>& buckets)
{
    Json out = Json::array();
    for (const auto& b : buckets)
        out.push_back({{"name", b.name}, {"seconds", b.seconds}, {"count", b.count}});
    return out;
}

Json trace_to_json(const ExecutionTrace& trace)
{
    Json outcomes = Json::array();
    for (const auto& o : trace.outcomes())
        outcomes.push_back(outcome_to_json(o));
    Json out = {{"seed", trace.seed},
                {"mode", to_string(trace.mode)},
                {"qubits", trace.num_qubits},
                {"instructions_executed", trace.records.size()},
                {"total_seconds", trace.total_seconds},
                {"timing", timing_report(trace)},
                {"buckets", buckets_to_json(trace.buckets())},
                {"outcomes", std::move(outcomes)},
                {"cbits", trace.cbits.to_string()},
                {"peak_stored_entries", trace.peak_stored_entries}};
    if (trace.cbits.size() > 0 && trace.cbits.size() <= 64)
        out["cbits_value"] = trace.cbits.to_integer();
    return out;
}

Json gates_to_json(const GateRegistry& registry)
{
    Json out = Json::array();
    for (const auto* g : registry.list())
        out.push_back({{"name", g->name},
                       {"kind", to_string(g->kind)},
                       {"arity", g->arity},
                       {"params", g->params},
                       {"builtin", g->builtin}});
    return out;
}

}  // namespace qkit
