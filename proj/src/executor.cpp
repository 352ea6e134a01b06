#include "qkit/executor.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace qkit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b)
{
    return std::chrono::duration<double>(b - a).count();
}

const char* const kCanonicalBuckets[] = {"Hadamard", "QuModExp", "QFT", "Measure"};

Matrix2 to_matrix2(const std::vector<Amplitude>& m) { return {m[0], m[1], m[2], m[3]}; }

bool classical_controls_pass(const ClassicalRegister& cbits, const std::vector<std::size_t>& controls)
{
    return std::all_of(controls.begin(), controls.end(), [&](std::size_t c) { return cbits.get(c) == 1; });
}

std::string fixed10(double x)
{
    if (std::abs(x) < 5e-11)
        x = 0.0;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10f", x);
    return buf;
}

std::string full_precision(double x)
{
    if (x == 0.0)
        x = 0.0;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

StateFormat state_format_from_string(const std::string& name)
{
    if (name == "amplitudes")
        return StateFormat::Amplitudes;
    if (name == "probabilities")
        return StateFormat::Probabilities;
    if (name == "plain")
        return StateFormat::Plain;
    throw ConfigError("unknown state format '" + name + "' (expected amplitudes, probabilities or plain)");
}

MeasurementMode measurement_mode_from_string(const std::string& name)
{
    if (name == "in-place" || name == "in_place" || name == "inplace")
        return MeasurementMode::InPlace;
    if (name == "deferred")
        return MeasurementMode::Deferred;
    throw ConfigError("unknown measurement mode '" + name + "' (expected in-place or deferred)");
}

std::string timing_bucket(const std::string& name)
{
    if (name == "Hadamard")
        return "Hadamard";
    if (name == "QuModExpUaj")
        return "QuModExp";
    if (name == "CPHASE" || name == "SWAP" || name == "RPhase")
        return "QFT";
    if (name == "Measure" || name == "Copy" || name == "SigmaX")
        return "Measure";
    return name;
}

void apply_gate_instruction(QuantumState& state, ClassicalRegister& cbits, const Instruction& instr,
                            const GateRegistry& registry)
{
    const GateDef& def = registry.at(instr.gate);
    const auto qubits = instr.quantum_targets();
    const auto classical = instr.classical_targets();

    switch (def.kind) {
    case GateKind::Builtin1q:
    case GateKind::UnitaryMatrix:
        if (!classical_controls_pass(cbits, classical))
            return;
        if (def.arity <= 1) {
            const auto m = to_matrix2(def.matrix);
            for (int q : qubits)
                state.apply_1q(q, m);
        } else {
            state.apply_matrix(qubits, def.matrix);
        }
        return;
    case GateKind::Permutation:
        if (classical_controls_pass(cbits, classical))
            state.apply_permutation(qubits, def.permutation);
        return;
    case GateKind::CPhase:
        if (classical_controls_pass(cbits, classical))
            state.apply_cphase(qubits.at(0), qubits.at(1), instr.param("phi")->as_real());
        return;
    case GateKind::Swap:
        if (classical_controls_pass(cbits, classical))
            state.apply_swap(qubits.at(0), qubits.at(1));
        return;
    case GateKind::RPhase: {
        std::vector<int> bits;
        bits.reserve(classical.size());
        for (auto c : classical)
            bits.push_back(cbits.get(c));
        state.apply_phase(qubits.at(0), rphase_angle(bits));
        return;
    }
    case GateKind::Copy: {
        const int q = qubits.at(0);
        const int one[1] = {1};
        const int src[1] = {q};
        const double p1 = state.probability_of(src, one);
        int value = 0;
        if (p1 >= 1.0 - 1e-10)
            value = 1;
        else if (p1 > 1e-10)
            throw ExecutionError("Copy before Measure: qubit " + std::to_string(q) +
                                 " is not in a definite state (P(1) = " + std::to_string(p1) + ")");
        copy_action(cbits, value, classical.at(0));
        return;
    }
    case GateKind::ModExp: {
        if (!classical_controls_pass(cbits, classical))
            return;
        const ModExpMap map(static_cast<std::uint64_t>(instr.param("a")->as_integer()),
                            static_cast<std::uint64_t>(instr.param("j")->as_integer()),
                            static_cast<std::uint64_t>(instr.param("N")->as_integer()));
        const int control[1] = {qubits.front()};
        const std::span<const int> work(qubits.data() + 1, qubits.size() - 1);
        state.apply_permutation(work, PermutationFn(map), control);
        return;
    }
    }
}

// ---------------------------------------------------------------------------

Executor::Executor(Program program, GateRegistry registry, ExecutionConfig config)
    : program_(std::move(program)), config_(std::move(config)), rng_(config_.seed)
{
    if (config_.snapshot_cap < 1)
        throw ConfigError("snapshot cap must be at least 1");
    auto diags = validate(program_, registry);
    if (!diags.empty())
        throw ParseError(std::move(diags));
    registry_ = program_.registry(registry);
    resolve_targets(program_);
    trace_.seed = config_.seed;
    trace_.mode = config_.mode;
    trace_.num_qubits = program_.num_qubits;
}

void Executor::check_deferred(const Instruction& instr) const
{
    for (int q : instr.quantum_targets())
        if (std::find(deferred_.begin(), deferred_.end(), q) != deferred_.end())
            throw ExecutionError("gate after deferred measurement of qubit " + std::to_string(q));
}

void Executor::execute(const Instruction& instr, InstructionRecord& record)
{
    switch (instr.kind) {
    case InstructionKind::AddQubits:
        state_.emplace(instr.count, config_.mode, config_.memory_budget);
        return;
    case InstructionKind::AddCbits:
        cbits_ = ClassicalRegister(static_cast<std::size_t>(instr.count));
        return;
    case InstructionKind::Measure: {
        const auto qubits = instr.quantum_targets();
        if (config_.measurement == MeasurementMode::Deferred) {
            for (int q : qubits)
                if (std::find(deferred_.begin(), deferred_.end(), q) == deferred_.end())
                    deferred_.push_back(q);
            return;
        }
        record.outcome = state_->measure(qubits, rng_);
        return;
    }
    case InstructionKind::GateOp:
        if (config_.measurement == MeasurementMode::Deferred)
            check_deferred(instr);
        apply_gate_instruction(*state_, cbits_, instr, registry_);
        return;
    }
}

const InstructionRecord& Executor::step()
{
    if (finished_)
        throw ExecutionError("execution already finished");
    if (done())
        throw ExecutionError("no instruction left to execute");
    const auto start = Clock::now();
    const Instruction& instr = program_.instructions[pc_];

    InstructionRecord record;
    record.index = pc_;
    record.line = instr.line;
    record.text = emit_instruction(instr);
    if (instr.kind == InstructionKind::GateOp)
        record.bucket = timing_bucket(instr.gate);
    else if (instr.kind == InstructionKind::Measure)
        record.bucket = "Measure";

    try {
        execute(instr, record);
    } catch (const Error& e) {
        rethrow_at_line(e, instr.line);
    }
    const auto applied = Clock::now();
    record.seconds = seconds_between(start, applied);
    if (state_) {
        record.stored_entries = state_->mode() == StorageMode::Sparse
                                    ? state_->nonzero_count()
                                    : std::size_t{1} << state_->num_qubits();
        trace_.peak_stored_entries = std::max(trace_.peak_stored_entries, record.stored_entries);
    }
    if (config_.trace_states && state_ &&
        (instr.kind == InstructionKind::GateOp || instr.kind == InstructionKind::Measure))
        snapshot(record);

    trace_.records.push_back(std::move(record));
    ++pc_;
    trace_.total_seconds += seconds_between(start, Clock::now());
    return trace_.records.back();
}

void Executor::snapshot(const InstructionRecord& record)
{
    auto snap = make_snapshot(*state_, config_.snapshot_cap);
    snap.step = record.index;
    snap.line = record.line;
    snap.text = record.text;
    snap.cbits = cbits_;
    trace_.snapshots.push_back(std::move(snap));
}

ExecutionTrace Executor::finish()
{
    if (finished_)
        throw ExecutionError("execution already finished");
    const auto start = Clock::now();
    if (!deferred_.empty() && state_)
        trace_.deferred_outcome = state_->measure(deferred_, rng_);
    trace_.cbits = cbits_;
    if (state_) {
        trace_.final_state = std::move(*state_);
        state_.reset();
    }
    finished_ = true;
    trace_.total_seconds += seconds_between(start, Clock::now());
    if (config_.log_path)
        append_run_log(*config_.log_path, trace_, config_.log_format);
    return std::move(trace_);
}

ExecutionTrace Executor::run()
{
    while (!done())
        step();
    return finish();
}

ExecutionTrace execute(const Program& program, const GateRegistry& registry, const ExecutionConfig& config)
{
    return Executor(program, registry, config).run();
}

// ---------------------------------------------------------------------------

std::vector<TimingBucket> ExecutionTrace::buckets() const
{
    std::vector<TimingBucket> out;
    for (const char* name : kCanonicalBuckets)
        out.push_back({name, 0.0, 0});
    for (const auto& r : records) {
        if (r.bucket.empty())
            continue;
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& b) { return b.name == r.bucket; });
        if (it == out.end()) {
            out.push_back({r.bucket, 0.0, 0});
            it = out.end() - 1;
        }
        it->seconds += r.seconds;
        ++it->count;
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const auto& b) { return b.count == 0; }), out.end());
    return out;
}

std::vector<MeasurementOutcome> ExecutionTrace::outcomes() const
{
    std::vector<MeasurementOutcome> out;
    for (const auto& r : records)
        if (r.outcome)
            out.push_back(*r.outcome);
    if (deferred_outcome)
        out.push_back(*deferred_outcome);
    return out;
}

std::string timing_report(const ExecutionTrace& trace)
{
    std::string out;
    char buf[160];
    for (const auto& b : trace.buckets()) {
        std::snprintf(buf, sizeof buf, "%s: %.2fs.\n", b.name.c_str(), b.seconds);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "Total: %.2fs.\n", trace.total_seconds);
    out += buf;
    return out;
}

std::string basis_bitstring(BasisIndex index, int num_qubits)
{
    std::string s(static_cast<std::size_t>(num_qubits), '0');
    for (int q = 0; q < num_qubits; ++q)
        if ((index >> (num_qubits - 1 - q)) & 1u)
            s[static_cast<std::size_t>(q)] = '1';
    return s;
}

std::string render_state(const QuantumState& state, StateFormat format)
{
    std::string out;
    const int n = state.num_qubits();
    for (const auto& [index, amp] : state.entries()) {
        const double p = abs2(amp);
        if (p < 1e-12)
            continue;
        switch (format) {
        case StateFormat::Amplitudes:
            out += basis_bitstring(index, n) + " " + fixed10(amp.real()) + " " + fixed10(amp.imag()) + "\n";
            break;
        case StateFormat::Probabilities:
            out += basis_bitstring(index, n) + " " + fixed10(p) + "\n";
            break;
        case StateFormat::Plain:
            out += std::to_string(index) + " " + full_precision(amp.real()) + " " + full_precision(amp.imag()) +
                   " " + full_precision(p) + "\n";
            break;
        }
    }
    return out;
}

StateSnapshot make_snapshot(const QuantumState& state, std::size_t cap)
{
    StateSnapshot snap;
    auto entries = state.entries();
    snap.nonzero_count = entries.size();
    std::vector<std::pair<BasisIndex, double>> probs;
    probs.reserve(entries.size());
    for (const auto& [i, a] : entries)
        probs.emplace_back(i, abs2(a));
    const auto top = std::min<std::size_t>(16, probs.size());
    std::partial_sort(probs.begin(), probs.begin() + static_cast<std::ptrdiff_t>(top), probs.end(),
                      [](const auto& l, const auto& r) { return l.second > r.second || (l.second == r.second && l.first < r.first); });
    snap.top_probabilities.assign(probs.begin(), probs.begin() + static_cast<std::ptrdiff_t>(top));
    for (int q = 0; q < state.num_qubits(); ++q)
        snap.bloch.push_back(state.bloch_vector(q));
    snap.full = entries.size() <= cap;
    if (snap.full)
        snap.entries = std::move(entries);
    return snap;
}

const std::vector<StateSnapshot>& snapshot_states(const ExecutionTrace& trace) { return trace.snapshots; }

std::string format_run_output(const ExecutionTrace& trace, StateFormat format)
{
    std::string out = "seed: " + std::to_string(trace.seed) + "\n";
    out += timing_report(trace);
    for (const auto& r : trace.records)
        if (r.outcome)
            out += "Measure (line " + std::to_string(r.line) + "): " + r.outcome->bitstring() + "\n";
    if (trace.deferred_outcome)
        out += "Measure (deferred): " + trace.deferred_outcome->bitstring() + "\n";
    if (trace.cbits.size() > 0)
        out += "Classical register: " + trace.cbits.to_string() + "\n";
    if (trace.final_state)
        out += "Final state:\n" + render_state(*trace.final_state, format);
    return out;
}

std::string format_run_log(const ExecutionTrace& trace, StateFormat format)
{
    std::string out;
    out += "# qkit run seed=" + std::to_string(trace.seed) + " mode=" + to_string(trace.mode) + "\n";
    out += "## Instructions\n";
    char buf[96];
    for (const auto& r : trace.records) {
        std::snprintf(buf, sizeof buf, "[line %d] %.6fs ", r.line, r.seconds);
        out += buf + r.text + "\n";
    }
    out += "## Outcomes\n";
    for (const auto& r : trace.records)
        if (r.outcome)
            out += "[line " + std::to_string(r.line) + "] " + r.outcome->bitstring() + "\n";
    if (trace.deferred_outcome)
        out += "[deferred] " + trace.deferred_outcome->bitstring() + "\n";
    out += "## Timing\n" + timing_report(trace);
    if (trace.cbits.size() > 0)
        out += "## Classical register\n" + trace.cbits.to_string() + "\n";
    if (trace.final_state)
        out += "## Final state\n" + render_state(*trace.final_state, format);
    return out;
}

void append_run_log(const std::string& path, const ExecutionTrace& trace, StateFormat format)
{
    std::ofstream out(path, std::ios::app);
    if (!out)
        throw ConfigError("cannot open log file '" + path + "'");
    out << format_run_log(trace, format);
}

}  // namespace qkit
