#pragma once

// The `.qp` quantum-program language: one command per line.
//
//   AddQubits <n>
//   AddCbits <n>
//   GateOp <gate> <targets> [key=value ...]
//   Measure <targets>
//   DefGate <name> matrix <k> <re> <im> ...      (row-major 2^k x 2^k)
//   DefGate <name> perm <k> <image of 0> <image of 1> ...
//
// Targets are comma-separated integers or half-open ranges `lo:hi`.
// Non-negative integers are qubits; -k is classical bit nC-k. Lines whose
// first non-blank character is '#' are comments.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qkit/errors.hpp"
#include "qkit/gates.hpp"

namespace qkit {

/// Parameter value as written: an integer, a rational multiple of pi, or a
/// decimal literal. Kept in source form so emit() reproduces it exactly.
class ParamValue {
public:
    enum class Kind { Integer, PiFraction, Real };

    static ParamValue integer(std::int64_t v);
    static ParamValue pi_fraction(std::int64_t num, std::int64_t den);
    static ParamValue real(double v);
    /// Real value, recognized as k*PI/2^m when it equals one exactly.
    static ParamValue angle(double radians);
    static std::optional<ParamValue> parse(std::string_view token);

    Kind kind() const noexcept { return kind_; }
    double as_real() const;
    /// Throws ValidationError unless kind() == Integer.
    std::int64_t as_integer() const;
    std::string to_string() const;

    bool operator==(const ParamValue&) const = default;

private:
    Kind kind_ = Kind::Integer;
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
    double real_ = 0.0;
};

struct Param {
    std::string key;
    ParamValue value;
    bool operator==(const Param&) const = default;
};

/// One comma-separated item of a target list: a single index or `lo:hi`.
struct TargetItem {
    std::int64_t lo = 0;
    std::int64_t hi = 1;
    bool range = false;

    static TargetItem single(std::int64_t v) { return {v, v + 1, false}; }
    static TargetItem span(std::int64_t lo, std::int64_t hi) { return {lo, hi, true}; }
    std::string to_string() const;
};

struct TargetRef {
    bool classical = false;
    std::int64_t raw = 0;
    std::uint64_t resolved = 0;
    bool operator==(const TargetRef&) const = default;
};

enum class InstructionKind { AddQubits, AddCbits, GateOp, Measure };

struct Instruction {
    InstructionKind kind = InstructionKind::GateOp;
    int count = 0;  // AddQubits / AddCbits
    std::string gate;
    std::vector<TargetItem> items;
    std::vector<TargetRef> targets;  // expanded from items by resolve_targets()
    std::vector<Param> params;
    int line = 0;

    const ParamValue* param(std::string_view key) const;
    std::vector<int> quantum_targets() const;
    std::vector<std::size_t> classical_targets() const;
    /// Raw target values expanded from items, in order.
    std::vector<std::int64_t> raw_targets() const;

    static Instruction add_qubits(int n);
    static Instruction add_cbits(int n);
    static Instruction gate_op(std::string gate, std::vector<TargetItem> items, std::vector<Param> params = {});
    static Instruction measure(std::vector<TargetItem> items);
};

struct CustomGateDef {
    enum class Form { Matrix, Permutation };
    std::string name;
    Form form = Form::Matrix;
    int num_qubits = 1;
    std::vector<Amplitude> matrix;
    std::vector<std::uint64_t> table;
    int line = 0;
};

struct Program {
    std::vector<Instruction> instructions;
    int num_qubits = 0;
    int num_cbits = 0;
    std::vector<CustomGateDef> custom_gates;

    /// `base` plus this program's custom gates.
    GateRegistry registry(const GateRegistry& base) const;
};

/// Structural equality: declarations, gate names, expanded raw targets,
/// parameters and custom definitions. Line numbers are ignored.
bool structurally_equal(const Program& a, const Program& b);

enum class Severity { Error, Warning };

struct Diagnostic {
    int line = 0;
    Severity severity = Severity::Error;
    std::string message;
    std::string token;

    std::string to_string() const;
};

class ParseError : public Error {
public:
    explicit ParseError(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

struct ParseResult {
    std::optional<Program> program;
    std::vector<Diagnostic> diagnostics;
};

/// Never throws; on failure `program` is empty and diagnostics explain why.
ParseResult parse_program(std::string_view text, const GateRegistry& base = GateRegistry::builtin());
/// Throws ParseError carrying every diagnostic.
Program parse(std::string_view text, const GateRegistry& base = GateRegistry::builtin());

std::string emit(const Program& program);
std::string emit_instruction(const Instruction& instruction);

/// Resolves target items against the declared register sizes. Negative raw
/// indices that cannot be resolved are left unresolved and reported by
/// validate().
void resolve_targets(Program& program);
/// Sets source line numbers to the positions emit() gives each line.
void number_lines(Program& program);

/// Empty iff the program is executable against `registry` (custom gates of
/// the program are added to it first).
std::vector<Diagnostic> validate(const Program& program, const GateRegistry& registry = GateRegistry::builtin());

}  // namespace qkit
