#include "sbi/diagnostics.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sbi {

double compute_energy(const AgentState& agent, double w, double epsilon, double f_value) {
    return 0.5 * (agent.m + epsilon) * norm2_sq(agent.v) + w * f_value;
}

std::vector<DissipationViolation> check_dissipation(const StepOutcome& step,
                                                    const SwarmConfig& cfg, SchemeKind scheme,
                                                    std::uint64_t iteration, double slack) {
    std::vector<DissipationViolation> out;
    if (scheme != SchemeKind::sbi_imex && scheme != SchemeKind::sbi_simex) return out;

    const double h = cfg.h;
    const double eps = cfg.epsilon;
    const double L = cfg.lipschitz.value;
    for (std::size_t i = 0; i < step.energy_before.size(); ++i) {
        const double me = step.mass_before[i] + eps;
        const double wi = cfg.w.size() == 1 ? cfg.w[0] : cfg.w[i];
        double bound = -0.5 * me * step.dv_sq[i];
        if (scheme == SchemeKind::sbi_imex)
            bound -= h * (cfg.R * me - 0.5 * h * wi * L) * step.v_after_sq[i];
        const double excess = (step.energy_after[i] - step.energy_before[i]) - bound;
        if (excess > slack) out.push_back({iteration, i, excess});
    }
    return out;
}

void record_energies(const SwarmState& state, const SwarmConfig& cfg, EnergyLedger& ledger,
                     bool lifecycle_happened) {
    Vec row(state.size());
    double tot = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        row[i] = compute_energy(state.agents[i], state.weights[i], cfg.epsilon,
                                state.agents[i].f_cached);
        tot += row[i];
    }
    ledger.per_agent.push_back(std::move(row));
    ledger.total.push_back(tot);
    ledger.lifecycle_marker.push_back(lifecycle_happened ? 1 : 0);
}

namespace {

void put(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

}  // namespace

TraceWriter::TraceWriter(std::ostream& out, int dim) : out_(out), dim_(dim) {
    out_ << "iter\tagent_id";
    for (int k = 0; k < dim_; ++k) out_ << "\tx" << k;
    for (int k = 0; k < dim_; ++k) out_ << "\tv" << k;
    out_ << "\tm\tF\tE\n";
}

void TraceWriter::append(const SwarmState& state, const SwarmConfig& cfg) {
    for (std::size_t i = 0; i < state.size(); ++i) {
        const AgentState& a = state.agents[i];
        if (static_cast<int>(a.x.size()) != dim_)
            throw std::runtime_error("TraceWriter: dimension changed mid-trace");
        out_ << state.iteration << '\t' << i;
        for (double c : a.x) {
            out_ << '\t';
            put(out_, c);
        }
        for (double c : a.v) {
            out_ << '\t';
            put(out_, c);
        }
        out_ << '\t';
        put(out_, a.m);
        out_ << '\t';
        put(out_, a.f_cached);
        out_ << '\t';
        put(out_, compute_energy(a, state.weights[i], cfg.epsilon, a.f_cached));
        out_ << '\n';
    }
    if (!out_) throw std::runtime_error("TraceWriter: write failed");
}

std::vector<TraceRow> read_trace(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_trace: empty input");
    // header tells us the dimension: 2 fixed + 2d coords + 3 scalars
    std::size_t cols = 1;
    for (char c : line)
        if (c == '\t') ++cols;
    if (cols < 7 || (cols - 5) % 2 != 0) throw std::runtime_error("read_trace: bad header");
    const std::size_t dim = (cols - 5) / 2;

    std::vector<TraceRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        TraceRow r;
        r.x.resize(dim);
        r.v.resize(dim);
        if (!(ss >> r.iter >> r.agent_id)) throw std::runtime_error("read_trace: bad row");
        for (std::size_t k = 0; k < dim; ++k) ss >> r.x[k];
        for (std::size_t k = 0; k < dim; ++k) ss >> r.v[k];
        if (!(ss >> r.m >> r.f >> r.e)) throw std::runtime_error("read_trace: bad row");
        rows.push_back(std::move(r));
    }
    return rows;
}

EnergyLedger ledger_from_trace(const std::vector<TraceRow>& rows, const SwarmConfig& cfg) {
    EnergyLedger ledger;
    std::uint64_t cur = 0;
    bool open = false;
    for (const TraceRow& r : rows) {
        if (!open || r.iter != cur) {
            ledger.per_agent.emplace_back();
            ledger.total.push_back(0.0);
            ledger.lifecycle_marker.push_back(0);
            cur = r.iter;
            open = true;
        }
        AgentState a;
        a.v = r.v;
        a.m = r.m;
        const double wi =
            cfg.w.size() == 1 ? cfg.w[0] : cfg.w[static_cast<std::size_t>(r.agent_id)];
        const double e = compute_energy(a, wi, cfg.epsilon, r.f);
        ledger.per_agent.back().push_back(e);
        ledger.total.back() += e;
    }
    return ledger;
}

}  // namespace sbi
