#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sbi/schemes.hpp"
#include "sbi/swarm.hpp"

namespace sbi {

/// Discrete mechanical energy E = (m+eps)/2 |v|^2 + w F(x).
double compute_energy(const AgentState& agent, double w, double epsilon, double f_value);

struct DissipationViolation {
    std::uint64_t iteration = 0;
    std::size_t agent = 0;
    double magnitude = 0.0;  // amount the step exceeded the dissipation bound
};

/// Checks the per-step dissipation bound against the recorded step data.
/// sbi_imex asserts
///   E' - E <= -(m+eps)/2 |dv|^2 - h (R (m+eps) - h w L / 2) |v'|^2
/// with L = cfg.lipschitz.value; sbi_simex asserts the unconditional form
///   E' - E <= -(m+eps)/2 |dv|^2.
/// Returns all exceedances above `slack`. Stochastic and baseline schemes are
/// exempt (empty result): accepted uphill moves are part of their contract.
std::vector<DissipationViolation> check_dissipation(const StepOutcome& step,
                                                    const SwarmConfig& cfg, SchemeKind scheme,
                                                    std::uint64_t iteration,
                                                    double slack = 1e-9);

/// Per-agent and total energy history plus every dissipation exceedance.
/// Rows are ragged on purpose: lifecycle passes change the agent count.
struct EnergyLedger {
    std::vector<Vec> per_agent;
    Vec total;
    std::vector<DissipationViolation> violations;
    std::vector<std::uint8_t> lifecycle_marker;  // 1: lifecycle ran before this row

    std::size_t rows() const { return per_agent.size(); }
};

/// Appends one snapshot of the state's energies to the ledger.
void record_energies(const SwarmState& state, const SwarmConfig& cfg, EnergyLedger& ledger,
                     bool lifecycle_happened = false);

// --- trace files -------------------------------------------------------------
//
// Tab-separated, one row per recorded iteration per agent, full double
// precision (17 significant digits):
//   iter  agent_id  x[0..d)  v[0..d)  m  F  E
// Events go to a side file: iter  kind  agents(;-separated)  detail.

struct TraceRow {
    std::uint64_t iter = 0;
    int agent_id = 0;
    Vec x;
    Vec v;
    double m = 0.0;
    double f = 0.0;
    double e = 0.0;
};

class TraceWriter {
public:
    /// Writes the header immediately. The stream must outlive the writer.
    TraceWriter(std::ostream& out, int dim);

    /// One row per agent from the current state; energies recomputed from it.
    void append(const SwarmState& state, const SwarmConfig& cfg);

private:
    std::ostream& out_;
    int dim_;
};

/// Parses a trace written by TraceWriter. Throws std::runtime_error on
/// malformed input.
std::vector<TraceRow> read_trace(std::istream& in);

/// Rebuilds per-iteration energy rows from trace rows (grouped by iter, in
/// file order), recomputing E from m, v and F. Round-trips record_energies
/// to within 1e-12.
EnergyLedger ledger_from_trace(const std::vector<TraceRow>& rows, const SwarmConfig& cfg);

}  // namespace sbi
