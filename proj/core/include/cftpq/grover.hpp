#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "cftpq/cftp.hpp"
#include "cftpq/models.hpp"

namespace cftpq {

/// Cost accounting for the simulated search: oracle applications, classical
/// map evaluations (N per oracle call in simulation, one per verification or
/// register measurement), measurements, and the per-oracle step cost T (one
/// oracle evaluates a T-step composed map).
struct QueryLedger {
    std::uint64_t oracle_calls = 0;
    std::uint64_t map_evaluations = 0;
    std::uint64_t measurements = 0;
    std::int64_t step_cost = 0;

    void merge(const QueryLedger& o) {
        oracle_calls += o.oracle_calls;
        map_evaluations += o.map_evaluations;
        measurements += o.measurements;
        step_cost = std::max(step_cost, o.step_cost);
    }
};

/// State vector over the first register; unit l2 norm within 1e-10.
struct AmplitudeVector {
    std::vector<std::complex<double>> amp;

    std::size_t size() const { return amp.size(); }
    double norm() const;
    void check_norm(double tol = 1e-10) const;
};

/// Equal superposition over 2^qubits basis states; qubits <= cap.
AmplitudeVector uniform_state(int qubits, int cap_qubits = 22);

/// Equal superposition over an arbitrary number of basis states (detection
/// problems need not have power-of-two size).
AmplitudeVector uniform_state_of_size(std::uint64_t size,
                                      std::uint64_t cap = std::uint64_t{1} << 22);

/// "Is the composed map non-constant?" as a search problem: x is marked iff
/// image[x] differs from the reference value y1.  The marked count M is
/// implicit and unknown to the search.
struct DetectionProblem {
    std::vector<State> image;  // image[x] = G_T(x)
    State reference = 0;       // y1

    std::uint64_t size() const { return image.size(); }
    bool marked(State x) const { return image[x] != reference; }
    std::uint64_t marked_count() const;  // test/bench convenience, not used by the search
};

/// Phase oracle: negate the amplitude of every marked basis state.  Counts
/// one oracle call and N map evaluations (each simulated call inspects the
/// whole image table; a per-oracle cost of T update steps is tracked via
/// QueryLedger::step_cost).
void oracle_phase_flip(AmplitudeVector& state, const DetectionProblem& problem,
                       QueryLedger& ledger);

/// Inversion about the mean: amp -> 2 <amp> - amp (reflection about the
/// uniform vector).
void diffusion(AmplitudeVector& state);

/// Probability that measuring after k Grover iterations hits a marked state:
/// sin^2((2k+1) * asin(sqrt(M/N))).  Requires 1 <= M <= N.
double success_probability(std::uint64_t N, std::uint64_t M, std::int64_t k);

/// Total probability mass on marked states of a simulated state.
double marked_mass(const AmplitudeVector& state, const DetectionProblem& problem);

/// Sample a basis state from |amp|^2 with a uniform variate.
State measure(const AmplitudeVector& state, double u);

/// Draw x uniformly and evaluate the map: one classical measurement of the
/// second register.
State measure_second_register(const std::vector<State>& image, UniformSequence& rng,
                              QueryLedger* ledger = nullptr);

struct DetectionOptions {
    double growth = 1.2;          // per-round multiplier on the iteration range
    double pass_cap_mult = 9.0;   // per-pass oracle budget, in units of sqrt(N)
    std::uint64_t budget = 0;     // overall oracle-call cap; 0 = passes * pass cap
};

struct DetectionOutcome {
    std::optional<State> witness;  // a verified marked state, if one was found
    QueryLedger ledger;
};

/// Search for any marked state when M is unknown: rounds run k Grover
/// iterations with k drawn uniformly from [0, m), m growing by `growth` up
/// to sqrt(N); a pass ends when its oracle budget (pass_cap_mult * sqrt(N))
/// is spent, and ceil(log2(1/epsilon)) passes bound the miss probability by
/// epsilon.  Every candidate is verified against the image table before
/// being returned, so a witness is never a false positive; "nothing found"
/// is wrong with probability <= epsilon when M >= 1.
DetectionOutcome detect_noncoalesced(const DetectionProblem& problem, UniformSequence& rng,
                                     double epsilon, const DetectionOptions& opt = {});

struct QuantumOptions {
    int premeasure = 8;          // cheap register measurements before Grover
    DetectionOptions detection;
    std::uint64_t amp_cap = std::uint64_t{1} << 22;
    const StartRemap* remap = nullptr;
};

/// The image table of G_T over every encoding (remapped starts first when a
/// remap is installed), built from the same stream the classical checks use,
/// so both consume identical alphas at identical time indices.
std::vector<State> evaluate_map(const CoupledUpdate& u, const RngStream& rng, std::int64_t T,
                                const StartRemap* remap = nullptr);

struct QuantumVerdict {
    CoalescenceReport report;  // survivors is the witnessed count (1 or 2)
    QueryLedger ledger;
};

/// The measurement-and-search verdict on an explicit image table: one
/// measurement fixes the reference value, a few cheap repeats look for an
/// early contradiction, then the search runs with miss budget epsilon.
/// Measurement randomness is drawn from the caller's sequence.  Used by
/// quantum_pi_subroutine and by the map-file detector in the CLI.
QuantumVerdict quantum_verdict_for_image(std::vector<State> image, UniformSequence& ms,
                                         double epsilon, const QuantumOptions& opt = {});

/// Coalescence check by search instead of enumeration: measure the second
/// register once to fix y1 (a few repeat measurements catch blatant
/// non-coalescence cheaply), then Grover-search for a state whose image
/// differs.  A non-coalesced verdict always carries a verified witness; a
/// coalesced verdict is wrong with probability <= epsilon.
QuantumVerdict quantum_pi_subroutine(const CoupledUpdate& u, const RngStream& rng,
                                     std::int64_t T, double epsilon,
                                     const QuantumOptions& opt = {});

struct QuantumCftpResult {
    State value = 0;
    std::int64_t lookback = 0;
    int rounds = 0;
    QueryLedger ledger;
};

/// Coupling from the past with the search-based coalescence check. Each
/// round spends at most epsilon of error budget, so the sampled distribution
/// is within rounds * epsilon of the exact stationary law in total
/// variation.
QuantumCftpResult quantum_cftp_sample(const CoupledUpdate& u, const CftpSchedule& schedule,
                                      const RngStream& rng, double epsilon,
                                      const QuantumOptions& opt = {});

/// Start remap folding non-admissible encodings onto the admissible state
/// x_a, so the searched map treats them exactly as x_a while the search
/// space stays the full 2^n.  x_a must be admissible.
StartRemap admissible_oracle_wrap(const CoupledUpdate& u, State x_a);

}  // namespace cftpq
