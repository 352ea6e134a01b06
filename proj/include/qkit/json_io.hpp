#pragma once

// JSON views of programs, circuits and execution results for the service.
//
// Circuit JSON:
//   { "qubits": n, "cbits": c,
//     "declarations": ["qubits", "cbits"],        (optional, source order)
//     "gates": [ {"name", "form": "matrix"|"perm", "qubits": k,
//                 "matrix": [[re, im], ...] | "images": [...]} ],
//     "columns": [ {"ops": [ {"gate": "CPHASE", "targets": [1, "2:4"],
//                             "params": {"phi": "PI/2"}} ]} ] }
//
// Measure appears as an op with gate "Measure". Flattening the columns in
// order gives the instruction sequence.

#include <string>
#include <vector>

#include "json.hpp"
#include "qkit/executor.hpp"
#include "qkit/qp.hpp"

namespace qkit {

using Json = nlohmann::json;

Json diagnostics_to_json(const std::vector<Diagnostic>& diagnostics);

/// Instruction list with resolved targets plus the canonical script.
Json program_to_json(const Program& program);

/// Packs instructions into columns: an op starts a new column when it
/// shares a qubit or classical bit with the current one.
Json program_to_circuit(const Program& program);

struct CircuitConversion {
    std::optional<Program> program;
    std::string script;
    /// Diagnostics carry the script line; `locations` maps each line back to
    /// its column/op (or gate definition) in the circuit.
    std::vector<Diagnostic> diagnostics;
    Json locations = Json::array();
};

/// Builds and validates the program a circuit describes. Never throws.
CircuitConversion circuit_to_program(const Json& circuit, const GateRegistry& base = GateRegistry::builtin());

Json bloch_to_json(const BlochVector& b);
Json outcome_to_json(const MeasurementOutcome& outcome);
Json snapshot_to_json(const StateSnapshot& snapshot, int num_qubits);
Json record_to_json(const InstructionRecord& record);
Json buckets_to_json(const std::vector<TimingBucket>& buckets);
Json trace_to_json(const ExecutionTrace& trace);
Json gates_to_json(const GateRegistry& registry);

}  // namespace qkit
