#include "qkit/qp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace qkit {

// ---------------------------------------------------------------------------
// ParamValue

ParamValue ParamValue::integer(std::int64_t v)
{
    ParamValue p;
    p.kind_ = Kind::Integer;
    p.num_ = v;
    return p;
}

ParamValue ParamValue::pi_fraction(std::int64_t num, std::int64_t den)
{
    if (den <= 0)
        throw ValidationError("pi fraction needs a positive denominator");
    ParamValue p;
    p.kind_ = Kind::PiFraction;
    p.num_ = num;
    p.den_ = den;
    return p;
}

ParamValue ParamValue::real(double v)
{
    ParamValue p;
    p.kind_ = Kind::Real;
    p.real_ = v;
    return p;
}

ParamValue ParamValue::angle(double radians)
{
    if (std::isfinite(radians)) {
        for (std::int64_t den = 1; den <= (std::int64_t{1} << 40); den *= 2) {
            const double scaled = radians / std::numbers::pi * static_cast<double>(den);
            if (std::abs(scaled) > 0x1.0p52)
                break;
            const auto num = static_cast<std::int64_t>(std::llround(scaled));
            if (static_cast<double>(num) * std::numbers::pi / static_cast<double>(den) == radians)
                return num == 0 ? integer(0) : pi_fraction(num, den);
        }
    }
    return real(radians);
}

namespace {

bool parse_int(std::string_view s, std::int64_t& out)
{
    if (s.empty())
        return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

}  // namespace

std::optional<ParamValue> ParamValue::parse(std::string_view token)
{
    if (token.empty())
        return std::nullopt;
    std::int64_t iv = 0;
    if (parse_int(token, iv))
        return integer(iv);

    // [-][<int>*]PI[/<int>]
    if (const auto pi = token.find("PI"); pi != std::string_view::npos) {
        std::string_view head = token.substr(0, pi);
        std::string_view tail = token.substr(pi + 2);
        std::int64_t num = 1;
        if (head == "-") {
            num = -1;
        } else if (!head.empty()) {
            if (head.back() != '*' || !parse_int(head.substr(0, head.size() - 1), num))
                return std::nullopt;
        }
        std::int64_t den = 1;
        if (!tail.empty()) {
            if (tail.front() != '/' || !parse_int(tail.substr(1), den) || den <= 0)
                return std::nullopt;
        }
        return pi_fraction(num, den);
    }

    double dv = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), dv);
    if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(dv))
        return std::nullopt;
    return real(dv);
}

double ParamValue::as_real() const
{
    switch (kind_) {
    case Kind::Integer: return static_cast<double>(num_);
    case Kind::PiFraction: return static_cast<double>(num_) * std::numbers::pi / static_cast<double>(den_);
    case Kind::Real: return real_;
    }
    return 0.0;
}

std::int64_t ParamValue::as_integer() const
{
    if (kind_ != Kind::Integer)
        throw ValidationError("expected an integer parameter, got " + to_string());
    return num_;
}

std::string ParamValue::to_string() const
{
    switch (kind_) {
    case Kind::Integer: return std::to_string(num_);
    case Kind::PiFraction: {
        std::string s;
        if (num_ == -1)
            s = "-PI";
        else if (num_ == 1)
            s = "PI";
        else
            s = std::to_string(num_) + "*PI";
        if (den_ != 1)
            s += "/" + std::to_string(den_);
        return s;
    }
    case Kind::Real: {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, real_);
        std::string s(buf, ptr);
        if (s.find_first_of(".e") == std::string::npos)
            s += ".0";
        return s;
    }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Instruction helpers

std::string TargetItem::to_string() const
{
    if (range)
        return std::to_string(lo) + ":" + std::to_string(hi);
    return std::to_string(lo);
}

const ParamValue* Instruction::param(std::string_view key) const
{
    for (const auto& p : params)
        if (p.key == key)
            return &p.value;
    return nullptr;
}

std::vector<std::int64_t> Instruction::raw_targets() const
{
    std::vector<std::int64_t> out;
    for (const auto& item : items)
        for (auto v = item.lo; v < item.hi; ++v)
            out.push_back(v);
    return out;
}

std::vector<int> Instruction::quantum_targets() const
{
    std::vector<int> out;
    for (const auto& t : targets)
        if (!t.classical)
            out.push_back(static_cast<int>(t.resolved));
    return out;
}

std::vector<std::size_t> Instruction::classical_targets() const
{
    std::vector<std::size_t> out;
    for (const auto& t : targets)
        if (t.classical)
            out.push_back(static_cast<std::size_t>(t.resolved));
    return out;
}

Instruction Instruction::add_qubits(int n)
{
    Instruction i;
    i.kind = InstructionKind::AddQubits;
    i.count = n;
    return i;
}

Instruction Instruction::add_cbits(int n)
{
    Instruction i;
    i.kind = InstructionKind::AddCbits;
    i.count = n;
    return i;
}

Instruction Instruction::gate_op(std::string gate, std::vector<TargetItem> items, std::vector<Param> params)
{
    Instruction i;
    i.kind = InstructionKind::GateOp;
    i.gate = std::move(gate);
    i.items = std::move(items);
    i.params = std::move(params);
    return i;
}

Instruction Instruction::measure(std::vector<TargetItem> items)
{
    Instruction i;
    i.kind = InstructionKind::Measure;
    i.items = std::move(items);
    return i;
}

GateRegistry Program::registry(const GateRegistry& base) const
{
    GateRegistry r = base;
    for (const auto& def : custom_gates) {
        if (def.form == CustomGateDef::Form::Matrix)
            r.register_matrix(def.name, def.matrix);
        else
            r.register_permutation_table(def.name, def.num_qubits, def.table);
    }
    return r;
}

static bool same_instruction(const Instruction& a, const Instruction& b)
{
    return a.kind == b.kind && a.count == b.count && a.gate == b.gate && a.raw_targets() == b.raw_targets() &&
           a.params == b.params;
}

bool structurally_equal(const Program& a, const Program& b)
{
    if (a.num_qubits != b.num_qubits || a.num_cbits != b.num_cbits ||
        a.instructions.size() != b.instructions.size() || a.custom_gates.size() != b.custom_gates.size())
        return false;
    for (std::size_t n = 0; n < a.instructions.size(); ++n)
        if (!same_instruction(a.instructions[n], b.instructions[n]))
            return false;
    for (std::size_t n = 0; n < a.custom_gates.size(); ++n) {
        const auto& x = a.custom_gates[n];
        const auto& y = b.custom_gates[n];
        if (x.name != y.name || x.form != y.form || x.num_qubits != y.num_qubits || x.matrix != y.matrix ||
            x.table != y.table)
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Diagnostics

std::string Diagnostic::to_string() const
{
    std::string s = "line " + std::to_string(line) + ": " + (severity == Severity::Error ? "error" : "warning") +
                    ": " + message;
    if (!token.empty())
        s += " ('" + token + "')";
    return s;
}

static std::string join_diagnostics(const std::vector<Diagnostic>& diags)
{
    std::string s;
    for (const auto& d : diags) {
        if (!s.empty())
            s += "\n";
        s += d.to_string();
    }
    return s.empty() ? "invalid program" : s;
}

ParseError::ParseError(std::vector<Diagnostic> diagnostics)
    : Error(ErrorKind::Parse, join_diagnostics(diagnostics), diagnostics.empty() ? 0 : diagnostics.front().line),
      diagnostics_(std::move(diagnostics))
{
}

// ---------------------------------------------------------------------------
// Parser

namespace {

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t'))
            ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t')
            ++i;
        if (i > start)
            out.push_back(line.substr(start, i - start));
    }
    return out;
}

bool is_identifier(std::string_view s)
{
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
        return false;
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

constexpr std::int64_t kMaxRangeLength = 1 << 16;

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    ParseResult run(const GateRegistry& base)
    {
        std::size_t pos = 0;
        int line_no = 0;
        while (pos <= text_.size()) {
            const auto nl = text_.find('\n', pos);
            std::string_view line = text_.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            ++line_no;
            if (!line.empty() && line.back() == '\r')
                line.remove_suffix(1);
            parse_line(line, line_no);
            if (nl == std::string_view::npos)
                break;
            pos = nl + 1;
        }

        ParseResult result;
        if (has_error()) {
            result.diagnostics = std::move(diags_);
            return result;
        }
        resolve_targets(program_);
        auto semantic = validate(program_, base);
        if (!semantic.empty()) {
            result.diagnostics = std::move(semantic);
            return result;
        }
        result.program = std::move(program_);
        return result;
    }

private:
    void error(int line, std::string message, std::string_view token = {})
    {
        diags_.push_back({line, Severity::Error, std::move(message), std::string(token)});
    }

    bool has_error() const
    {
        return std::any_of(diags_.begin(), diags_.end(), [](const auto& d) { return d.severity == Severity::Error; });
    }

    void parse_line(std::string_view line, int line_no)
    {
        const auto tokens = split_ws(line);
        if (tokens.empty() || tokens[0].front() == '#')
            return;
        const auto cmd = tokens[0];
        if (cmd == "AddQubits" || cmd == "AddCbits")
            parse_declaration(tokens, line_no, cmd == "AddQubits");
        else if (cmd == "GateOp")
            parse_gate_op(tokens, line_no);
        else if (cmd == "Measure")
            parse_measure(tokens, line_no);
        else if (cmd == "DefGate")
            parse_defgate(tokens, line_no);
        else
            error(line_no, "unknown command", cmd);
    }

    void parse_declaration(const std::vector<std::string_view>& tokens, int line_no, bool qubits)
    {
        const char* what = qubits ? "AddQubits" : "AddCbits";
        if (tokens.size() != 2) {
            error(line_no, std::string(what) + " takes exactly one count", tokens.size() > 2 ? tokens[2] : tokens[0]);
            return;
        }
        std::int64_t n = 0;
        if (!parse_int(tokens[1], n) || n < 1) {
            error(line_no, "count must be a positive integer", tokens[1]);
            return;
        }
        if (qubits && n > kMaxQubits) {
            error(line_no, "at most " + std::to_string(kMaxQubits) + " qubits are supported", tokens[1]);
            return;
        }
        if (!qubits && n > 4096) {
            error(line_no, "at most 4096 classical bits are supported", tokens[1]);
            return;
        }
        if (seen_operation_) {
            error(line_no, std::string(what) + " must precede every GateOp and Measure", tokens[0]);
            return;
        }
        int& size = qubits ? program_.num_qubits : program_.num_cbits;
        if (size != 0) {
            error(line_no, std::string(qubits ? "qubits" : "classical bits") + " already declared", tokens[0]);
            return;
        }
        size = static_cast<int>(n);
        auto instr = qubits ? Instruction::add_qubits(size) : Instruction::add_cbits(size);
        instr.line = line_no;
        program_.instructions.push_back(std::move(instr));
    }

    bool parse_targets(std::string_view token, int line_no, std::vector<TargetItem>& items)
    {
        std::size_t start = 0;
        while (true) {
            const auto comma = token.find(',', start);
            const auto item = token.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            if (item.empty()) {
                error(line_no, "empty target in list", token);
                return false;
            }
            const auto colon = item.find(':');
            if (colon == std::string_view::npos) {
                std::int64_t v = 0;
                if (!parse_int(item, v)) {
                    error(line_no, "target is not an integer", item);
                    return false;
                }
                items.push_back(TargetItem::single(v));
            } else {
                std::int64_t lo = 0, hi = 0;
                if (!parse_int(item.substr(0, colon), lo) || !parse_int(item.substr(colon + 1), hi)) {
                    error(line_no, "malformed range", item);
                    return false;
                }
                if (lo >= hi) {
                    error(line_no, "malformed range (lo must be below hi)", item);
                    return false;
                }
                if (lo < 0 && hi > 0) {
                    error(line_no, "range mixes classical and quantum indices", item);
                    return false;
                }
                if (hi - lo > kMaxRangeLength) {
                    error(line_no, "range too long", item);
                    return false;
                }
                items.push_back(TargetItem::span(lo, hi));
            }
            if (comma == std::string_view::npos)
                return true;
            start = comma + 1;
        }
    }

    bool require_qubits(int line_no, std::string_view token)
    {
        seen_operation_ = true;
        if (program_.num_qubits == 0) {
            error(line_no, "use before AddQubits", token);
            return false;
        }
        return true;
    }

    void parse_gate_op(const std::vector<std::string_view>& tokens, int line_no)
    {
        if (!require_qubits(line_no, tokens[0]))
            return;
        if (tokens.size() < 2) {
            error(line_no, "GateOp needs a gate name", tokens[0]);
            return;
        }
        if (tokens.size() < 3) {
            error(line_no, "GateOp needs a target list", tokens[1]);
            return;
        }
        auto instr = Instruction::gate_op(std::string(tokens[1]), {});
        instr.line = line_no;
        if (!parse_targets(tokens[2], line_no, instr.items))
            return;
        for (std::size_t n = 3; n < tokens.size(); ++n) {
            const auto tok = tokens[n];
            const auto eq = tok.find('=');
            if (eq == std::string_view::npos || !is_identifier(tok.substr(0, eq))) {
                error(line_no, "expected key=value parameter", tok);
                return;
            }
            const auto key = std::string(tok.substr(0, eq));
            auto value = ParamValue::parse(tok.substr(eq + 1));
            if (!value) {
                error(line_no, "malformed parameter value", tok);
                return;
            }
            if (instr.param(key)) {
                error(line_no, "parameter given twice", tok);
                return;
            }
            instr.params.push_back({key, *value});
        }
        program_.instructions.push_back(std::move(instr));
    }

    void parse_measure(const std::vector<std::string_view>& tokens, int line_no)
    {
        if (!require_qubits(line_no, tokens[0]))
            return;
        if (tokens.size() != 2) {
            error(line_no, "Measure takes exactly one target list", tokens.size() > 2 ? tokens[2] : tokens[0]);
            return;
        }
        auto instr = Instruction::measure({});
        instr.line = line_no;
        if (!parse_targets(tokens[1], line_no, instr.items))
            return;
        program_.instructions.push_back(std::move(instr));
    }

    void parse_defgate(const std::vector<std::string_view>& tokens, int line_no)
    {
        if (tokens.size() < 4) {
            error(line_no, "DefGate needs a name, a form (matrix|perm) and a qubit count", tokens[0]);
            return;
        }
        CustomGateDef def;
        def.line = line_no;
        def.name = std::string(tokens[1]);
        if (!is_identifier(tokens[1])) {
            error(line_no, "gate name must be an identifier", tokens[1]);
            return;
        }
        std::int64_t k = 0;
        if (!parse_int(tokens[3], k) || k < 1 || k > 10) {
            error(line_no, "custom gate qubit count must be in [1, 10]", tokens[3]);
            return;
        }
        def.num_qubits = static_cast<int>(k);
        const std::size_t dim = std::size_t{1} << k;
        const std::size_t nvalues = tokens.size() - 4;
        if (tokens[2] == "matrix") {
            def.form = CustomGateDef::Form::Matrix;
            if (nvalues != 2 * dim * dim) {
                error(line_no, "matrix needs " + std::to_string(2 * dim * dim) + " real numbers (re im pairs)",
                      tokens[1]);
                return;
            }
            for (std::size_t n = 0; n < nvalues; n += 2) {
                auto re = ParamValue::parse(tokens[4 + n]);
                auto im = ParamValue::parse(tokens[5 + n]);
                if (!re || !im) {
                    error(line_no, "malformed matrix entry", !re ? tokens[4 + n] : tokens[5 + n]);
                    return;
                }
                def.matrix.emplace_back(re->as_real(), im->as_real());
            }
        } else if (tokens[2] == "perm") {
            def.form = CustomGateDef::Form::Permutation;
            if (nvalues != dim) {
                error(line_no, "permutation needs " + std::to_string(dim) + " images", tokens[1]);
                return;
            }
            for (std::size_t n = 0; n < nvalues; ++n) {
                std::int64_t v = 0;
                if (!parse_int(tokens[4 + n], v) || v < 0) {
                    error(line_no, "permutation image must be a non-negative integer", tokens[4 + n]);
                    return;
                }
                def.table.push_back(static_cast<std::uint64_t>(v));
            }
        } else {
            error(line_no, "DefGate form must be 'matrix' or 'perm'", tokens[2]);
            return;
        }
        program_.custom_gates.push_back(std::move(def));
    }

    std::string_view text_;
    Program program_;
    std::vector<Diagnostic> diags_;
    bool seen_operation_ = false;
};

}  // namespace

ParseResult parse_program(std::string_view text, const GateRegistry& base)
{
    return Parser(text).run(base);
}

Program parse(std::string_view text, const GateRegistry& base)
{
    auto result = parse_program(text, base);
    if (!result.program)
        throw ParseError(std::move(result.diagnostics));
    return std::move(*result.program);
}

// ---------------------------------------------------------------------------
// Emitter

std::string emit_instruction(const Instruction& instr)
{
    std::string s;
    switch (instr.kind) {
    case InstructionKind::AddQubits: return "AddQubits " + std::to_string(instr.count);
    case InstructionKind::AddCbits: return "AddCbits " + std::to_string(instr.count);
    case InstructionKind::GateOp: s = "GateOp " + instr.gate + " "; break;
    case InstructionKind::Measure: s = "Measure "; break;
    }
    for (std::size_t n = 0; n < instr.items.size(); ++n) {
        if (n)
            s += ",";
        s += instr.items[n].to_string();
    }
    for (const auto& p : instr.params)
        s += " " + p.key + "=" + p.value.to_string();
    return s;
}

static std::string emit_defgate(const CustomGateDef& def)
{
    std::string s = "DefGate " + def.name + (def.form == CustomGateDef::Form::Matrix ? " matrix " : " perm ") +
                    std::to_string(def.num_qubits);
    if (def.form == CustomGateDef::Form::Matrix) {
        for (const auto& a : def.matrix)
            s += " " + ParamValue::real(a.real()).to_string() + " " + ParamValue::real(a.imag()).to_string();
    } else {
        for (auto v : def.table)
            s += " " + std::to_string(v);
    }
    return s;
}

std::string emit(const Program& program)
{
    std::string out;
    for (const auto& def : program.custom_gates)
        out += emit_defgate(def) + "\n";
    for (const auto& instr : program.instructions)
        out += emit_instruction(instr) + "\n";
    return out;
}

void number_lines(Program& program)
{
    int line = 1;
    for (auto& def : program.custom_gates)
        def.line = line++;
    for (auto& instr : program.instructions)
        instr.line = line++;
}

void resolve_targets(Program& program)
{
    for (auto& instr : program.instructions) {
        instr.targets.clear();
        for (auto raw : instr.raw_targets()) {
            TargetRef ref;
            ref.raw = raw;
            ref.classical = raw < 0;
            if (raw >= 0)
                ref.resolved = static_cast<std::uint64_t>(raw);
            else if (-raw <= program.num_cbits)
                ref.resolved = static_cast<std::uint64_t>(program.num_cbits + raw);
            else
                ref.resolved = ~std::uint64_t{0};
            instr.targets.push_back(ref);
        }
    }
}

// ---------------------------------------------------------------------------
// Validation

namespace {

struct Checker {
    const Program& program;
    GateRegistry registry;
    std::vector<Diagnostic> diags;

    void error(int line, std::string message, std::string token = {})
    {
        diags.push_back({line, Severity::Error, std::move(message), std::move(token)});
    }

    void check_decls()
    {
        int nq = 0, nc = 0;
        bool seen_op = false;
        for (const auto& instr : program.instructions) {
            if (instr.kind == InstructionKind::AddQubits || instr.kind == InstructionKind::AddCbits) {
                const bool q = instr.kind == InstructionKind::AddQubits;
                if (seen_op)
                    error(instr.line, "declaration after the first operation", emit_instruction(instr));
                if ((q ? nq : nc) != 0)
                    error(instr.line, q ? "qubits declared twice" : "classical bits declared twice");
                (q ? nq : nc) = instr.count;
                if (q && (instr.count < 1 || instr.count > kMaxQubits))
                    error(instr.line, "qubit count out of range", std::to_string(instr.count));
                if (!q && instr.count < 1)
                    error(instr.line, "classical bit count must be positive", std::to_string(instr.count));
            } else {
                if (nq == 0 && !seen_op)
                    error(instr.line, "use before AddQubits", emit_instruction(instr));
                seen_op = true;
            }
        }
        if (nq != program.num_qubits || nc != program.num_cbits)
            error(0, "declared register sizes do not match the program header");
    }

    void check_params(const Instruction& instr, const GateDef& def)
    {
        for (const auto& p : instr.params)
            if (std::find(def.params.begin(), def.params.end(), p.key) == def.params.end())
                error(instr.line, "gate " + def.name + " takes no parameter '" + p.key + "'", p.key);
        for (const auto& name : def.params)
            if (!instr.param(name))
                error(instr.line, "gate " + def.name + " requires parameter '" + name + "'");
    }

    void check_instruction(const Instruction& instr)
    {
        if (instr.kind == InstructionKind::AddQubits || instr.kind == InstructionKind::AddCbits)
            return;

        std::vector<std::int64_t> quantum;
        std::vector<std::int64_t> classical;
        std::vector<bool> order_is_classical;
        bool ok = true;
        for (auto raw : instr.raw_targets()) {
            if (raw >= 0) {
                if (raw >= program.num_qubits) {
                    error(instr.line,
                          "qubit index out of range (" + std::to_string(program.num_qubits) + " declared)",
                          std::to_string(raw));
                    ok = false;
                }
                quantum.push_back(raw);
            } else {
                if (-raw > program.num_cbits) {
                    error(instr.line,
                          "unresolvable classical index (" + std::to_string(program.num_cbits) + " declared)",
                          std::to_string(raw));
                    ok = false;
                }
                classical.push_back(raw);
            }
            order_is_classical.push_back(raw < 0);
        }
        if (!ok)
            return;

        std::set<std::int64_t> unique(quantum.begin(), quantum.end());
        if (unique.size() != quantum.size())
            error(instr.line, "duplicate target", emit_instruction(instr));

        if (instr.kind == InstructionKind::Measure) {
            if (quantum.empty())
                error(instr.line, "Measure needs at least one qubit", emit_instruction(instr));
            if (!classical.empty())
                error(instr.line, "Measure accepts only qubit targets", std::to_string(classical.front()));
            return;
        }

        const auto* def = registry.find(instr.gate);
        if (!def) {
            error(instr.line, "unknown gate", instr.gate);
            return;
        }
        check_params(instr, *def);
        const auto nq = quantum.size();
        auto arity_error = [&](const std::string& what) {
            error(instr.line, "arity mismatch: " + def->name + " " + what + ", got " + std::to_string(nq) +
                                  " qubit and " + std::to_string(classical.size()) + " classical targets",
                  emit_instruction(instr));
        };

        switch (def->kind) {
        case GateKind::Builtin1q:
            if (nq < 1)
                arity_error("needs at least one qubit");
            break;
        case GateKind::UnitaryMatrix:
        case GateKind::Permutation:
            if (def->arity == 1 && def->kind == GateKind::UnitaryMatrix ? nq < 1
                                                                       : nq != static_cast<std::size_t>(def->arity))
                arity_error("acts on " + std::to_string(def->arity) + " qubits");
            break;
        case GateKind::CPhase:
        case GateKind::Swap:
            if (nq != 2)
                arity_error("acts on exactly 2 qubits");
            break;
        case GateKind::RPhase:
            if (nq != 1)
                arity_error("acts on exactly 1 qubit");
            if (classical.empty())
                error(instr.line, "RPhase needs at least one classical source", emit_instruction(instr));
            break;
        case GateKind::Copy:
            if (nq != 1 || classical.size() != 1 || order_is_classical.size() != 2 || order_is_classical[0] ||
                !order_is_classical[1])
                arity_error("takes a source qubit followed by a destination classical bit");
            break;
        case GateKind::ModExp: {
            if (nq < 2) {
                arity_error("needs a control qubit and at least one work qubit");
                break;
            }
            const auto* a = instr.param("a");
            const auto* j = instr.param("j");
            const auto* n = instr.param("N");
            if (!a || !j || !n)
                break;
            if (a->kind() != ParamValue::Kind::Integer || j->kind() != ParamValue::Kind::Integer ||
                n->kind() != ParamValue::Kind::Integer) {
                error(instr.line, "QuModExpUaj parameters a, j, N must be integers", emit_instruction(instr));
                break;
            }
            const auto av = a->as_integer(), jv = j->as_integer(), nv = n->as_integer();
            if (nv < 3 || av < 1 || jv < 0) {
                error(instr.line, "QuModExpUaj needs N >= 3, a >= 1, j >= 0", emit_instruction(instr));
                break;
            }
            if (gcd(static_cast<std::uint64_t>(av), static_cast<std::uint64_t>(nv)) != 1)
                error(instr.line, "QuModExpUaj needs gcd(a, N) = 1", emit_instruction(instr));
            const auto work = nq - 1;
            if (work < 63 && (std::uint64_t{1} << work) <= static_cast<std::uint64_t>(nv))
                error(instr.line, "work register of " + std::to_string(work) + " qubits cannot hold N",
                      emit_instruction(instr));
            break;
        }
        }
    }
};

}  // namespace

std::vector<Diagnostic> validate(const Program& program, const GateRegistry& registry)
{
    Checker checker{program, registry, {}};
    for (const auto& def : program.custom_gates) {
        try {
            if (def.form == CustomGateDef::Form::Matrix)
                checker.registry.register_matrix(def.name, def.matrix);
            else
                checker.registry.register_permutation_table(def.name, def.num_qubits, def.table);
        } catch (const Error& e) {
            checker.error(def.line, e.message(), def.name);
        }
    }
    checker.check_decls();
    for (const auto& instr : program.instructions)
        checker.check_instruction(instr);
    return std::move(checker.diags);
}

}  // namespace qkit
