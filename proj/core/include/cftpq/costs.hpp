#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cftpq/cftp.hpp"
#include "cftpq/grover.hpp"
#include "cftpq/models.hpp"

namespace cftpq {

/// Asymptotic family for the coalescence time of the underlying dynamics:
/// rapid chains coalesce within ln^a N steps, torpid chains within N^c.
enum class MixingRegime { Rapid, Torpid };

/// Operation-count model for one coalescence check over N encodings with M
/// non-coalesced ones. Counting units: one classical map evaluation = one
/// operation; one oracle application on the quantum side (its internal
/// T-step evolution is carried by the g(N) factor). Random-number generation
/// is excluded from both sides.
struct CostModel {
    MixingRegime regime = MixingRegime::Rapid;
    double a = 1.0;            // rapid coalescence scale: g(N) = ln^a N
    double c = 1.0;            // torpid coalescence scale: g(N) = N^c
    std::optional<double> b;   // admissible states number N^b; absent = all admissible
    double perstep = 1.0;      // constant per-operation factor

    void validate() const;     // a >= 0, c > 0, b in (0, 1] when present
    double coalescence_scale(double n_states) const;  // g(N)
};

/// Classical cost of one coalescence check: perstep * g(N) * N / M map
/// evaluations (N/M tracked paths, g(N) steps each). With an admissible
/// subset (b set) the count follows the M = O(1) analysis instead:
/// perstep * (N + g(N) * N^b) — an N-scan to identify admissible encodings
/// plus the dynamics on the N^b admissible ones.
double classical_cost(double n_states, double marked, const CostModel& model);

/// Quantum cost of the same check: perstep * g(N) * sqrt(N/M) elementary
/// steps (sqrt(N/M) oracle calls, g(N) steps inside each). With an
/// admissible subset the search still runs over the full register, so the
/// factor is sqrt(N) regardless of M.
double quantum_cost(double n_states, double marked, const CostModel& model);

/// classical_cost / quantum_cost at the same point.
double speedup(double n_states, double marked, const CostModel& model);

/// Leading N-exponents of the two costs (M treated as constant). Torpid
/// plain: c+1 vs c+1/2; torpid admissible: max(c+b, 1) vs c+1/2; any rapid
/// model: 1 vs 1/2 (polylog factors dropped).
double classical_exponent(const CostModel& model);
double quantum_exponent(const CostModel& model);

/// Whether the classical/quantum ratio grows as a positive power of N,
/// i.e. classical_exponent >= quantum_exponent with a strict gap or exact
/// tie. For a torpid admissible model this is false exactly when b < 1/2
/// and c > 1/2 (few admissible states, very slow dynamics); every other
/// configuration gains.
bool polynomial_gain(const CostModel& model);

/// One benchmark grid point: register size and exact deviant count.
struct BenchPoint {
    std::uint64_t n_states = 0;
    std::uint64_t marked = 0;
};

/// Measured averages at one grid point. Operation counts are deterministic
/// given the seed; wall-clock fields are informational only and carry no
/// reproducibility guarantee.
struct BenchRecord {
    std::uint64_t n_states = 0;
    std::uint64_t marked = 0;          // 0 when not controlled (end-to-end runs)
    std::int64_t lookback = 0;         // mean coalescence lookback; 0 for detection-only
    double classical_ops = 0.0;        // mean classical map evaluations per trial
    double quantum_oracle_calls = 0.0; // mean oracle applications per trial
    double mean_survivors = 0.0;       // mean distinct images at the last failed lookback
    double classical_wall_s = 0.0;
    double quantum_wall_s = 0.0;
};

struct DetectionBenchOptions {
    int trials = 200;
    double epsilon = 1e-3;             // per-detection miss budget
    double classical_cap_mult = 50.0;  // classical draw cap, in units of N
    int threads = 1;
    DetectionOptions detection;
};

/// Scaling study of the coalescence check in isolation: for each grid point
/// build synthetic maps with exactly `marked` entries deviating from the
/// reference value, then measure the classical repeated-measurement count
/// (uniform draws until a deviant is seen, capped) against the searcher's
/// oracle calls. One record per point, averaged over trials; deterministic
/// given the seed and independent of the thread count.
std::vector<BenchRecord> run_detection_benchmark(const std::vector<BenchPoint>& grid,
                                                 std::uint64_t seed,
                                                 const DetectionBenchOptions& opt = {});

struct EndToEndOptions {
    int trials = 100;
    double epsilon = 1e-3;
    int threads = 1;
    TrackedMode mode = TrackedMode::Full;
};

/// Full sampler comparison on a real model: run classical and quantum CFTP
/// side by side over `trials` seeds and report mean operation ledgers.
/// Classical ops = tracked starts x total update steps across rounds;
/// survivors are counted by replaying the map at the last failed lookback.
BenchRecord run_end_to_end_benchmark(const CoupledUpdate& u, const CftpSchedule& schedule,
                                     std::uint64_t seed, const EndToEndOptions& opt = {});

/// Least-squares line through (ln x, ln y).
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;  // natural-log space
};

/// Fits the log-log slope; throws std::invalid_argument on fewer than two
/// distinct abscissae or any non-positive coordinate.
SlopeFit fit_loglog(const std::vector<std::pair<double, double>>& points);

/// Geometric-mean ratio measured/predicted over paired positive samples.
double fitted_multiplier(const std::vector<std::pair<double, double>>& measured_predicted);

/// Slope fits over a set of detection records (which should share one
/// deviant-count rule), plus the measured-vs-sqrt(N/M) multiplier.
struct BenchSummary {
    SlopeFit classical;          // classical_ops vs n_states
    SlopeFit quantum;            // quantum_oracle_calls vs n_states
    double quantum_multiplier = 0.0;
};

BenchSummary summarize_detection(const std::vector<BenchRecord>& records);

}  // namespace cftpq
