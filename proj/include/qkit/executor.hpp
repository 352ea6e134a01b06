#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qkit/gates.hpp"
#include "qkit/qp.hpp"
#include "qkit/state.hpp"

namespace qkit {

enum class MeasurementMode { InPlace, Deferred };
enum class StateFormat { Amplitudes, Probabilities, Plain };

StateFormat state_format_from_string(const std::string& name);
MeasurementMode measurement_mode_from_string(const std::string& name);

struct ExecutionConfig {
    std::uint64_t seed = 0;
    StorageMode mode = StorageMode::Sparse;
    MeasurementMode measurement = MeasurementMode::InPlace;
    bool trace_states = false;
    std::size_t snapshot_cap = 65536;
    std::uint64_t memory_budget = kDefaultMemoryBudget;
    /// When set, the finished trace is appended to this file.
    std::optional<std::string> log_path;
    StateFormat log_format = StateFormat::Amplitudes;
};

struct InstructionRecord {
    std::size_t index = 0;
    int line = 0;
    std::string text;
    std::string bucket;  // empty for declarations
    double seconds = 0.0;
    std::optional<MeasurementOutcome> outcome;
    /// Stored amplitudes after the instruction (sparse entries or dense size).
    std::size_t stored_entries = 0;
};

/// State view after one GateOp or Measure. Full snapshots carry every
/// nonzero amplitude; above the snapshot cap only a summary is kept.
struct StateSnapshot {
    std::size_t step = 0;
    int line = 0;
    std::string text;
    std::size_t nonzero_count = 0;
    bool full = false;
    std::vector<std::pair<BasisIndex, Amplitude>> entries;
    std::vector<std::pair<BasisIndex, double>> top_probabilities;  // at most 16, descending
    std::vector<BlochVector> bloch;
    ClassicalRegister cbits;
};

struct TimingBucket {
    std::string name;
    double seconds = 0.0;
    std::size_t count = 0;
};

struct ExecutionTrace {
    std::uint64_t seed = 0;
    StorageMode mode = StorageMode::Sparse;
    int num_qubits = 0;
    std::vector<InstructionRecord> records;
    double total_seconds = 0.0;
    ClassicalRegister cbits;
    std::optional<QuantumState> final_state;
    std::vector<StateSnapshot> snapshots;
    /// Joint sample of every deferred measurement, taken at program end.
    std::optional<MeasurementOutcome> deferred_outcome;
    std::size_t peak_stored_entries = 0;

    /// Hadamard, QuModExp, QFT, Measure first (when present), then other gate
    /// names in order of first use.
    std::vector<TimingBucket> buckets() const;
    /// Outcomes in execution order, the deferred joint sample last.
    std::vector<MeasurementOutcome> outcomes() const;
};

/// Timing bucket of a gate name: QuModExpUaj -> QuModExp; CPHASE, SWAP,
/// RPhase -> QFT; Measure, Copy and SigmaX (qubit readout and reset) ->
/// Measure; every other gate is its own bucket.
std::string timing_bucket(const std::string& gate_or_command);

/// Applies one GateOp to `state` with classical controls read from `cbits`.
/// Measure is not handled here.
void apply_gate_instruction(QuantumState& state, ClassicalRegister& cbits, const Instruction& instr,
                            const GateRegistry& registry);

/// Steps a validated program one instruction at a time.
class Executor {
public:
    /// Throws ParseError when the program does not validate.
    Executor(Program program, GateRegistry registry, ExecutionConfig config);

    bool done() const noexcept { return pc_ >= program_.instructions.size(); }
    std::size_t position() const noexcept { return pc_; }
    const Program& program() const noexcept { return program_; }
    const ExecutionConfig& config() const noexcept { return config_; }

    /// Executes the next instruction. Errors are rethrown with its line.
    const InstructionRecord& step();
    /// Runs the remaining instructions and finalizes the trace.
    ExecutionTrace run();
    /// Samples deferred measurements and hands over the trace.
    ExecutionTrace finish();

    const QuantumState* state() const noexcept { return state_ ? &*state_ : nullptr; }
    const ClassicalRegister& cbits() const noexcept { return cbits_; }
    const ExecutionTrace& trace() const noexcept { return trace_; }

private:
    void execute(const Instruction& instr, InstructionRecord& record);
    void check_deferred(const Instruction& instr) const;
    void snapshot(const InstructionRecord& record);

    Program program_;
    GateRegistry registry_;
    ExecutionConfig config_;
    Rng rng_;
    std::optional<QuantumState> state_;
    ClassicalRegister cbits_;
    std::vector<int> deferred_;
    std::size_t pc_ = 0;
    ExecutionTrace trace_;
    bool finished_ = false;
};

ExecutionTrace execute(const Program& program, const GateRegistry& registry, const ExecutionConfig& config);

/// "<bucket>: <seconds>s." per line, then "Total: <seconds>s.".
std::string timing_report(const ExecutionTrace& trace);

std::string render_state(const QuantumState& state, StateFormat format);
std::string basis_bitstring(BasisIndex index, int num_qubits);

const std::vector<StateSnapshot>& snapshot_states(const ExecutionTrace& trace);
StateSnapshot make_snapshot(const QuantumState& state, std::size_t cap);

/// What `qkit run` prints: seed line, timing report, measurement outcomes,
/// classical register, final state.
std::string format_run_output(const ExecutionTrace& trace, StateFormat format);

/// Instruction echo, outcomes, timing report, final state.
std::string format_run_log(const ExecutionTrace& trace, StateFormat format);
void append_run_log(const std::string& path, const ExecutionTrace& trace, StateFormat format);

}  // namespace qkit
