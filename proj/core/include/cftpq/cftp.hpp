#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cftpq/models.hpp"

namespace cftpq {

/// How the lookback T grows between coalescence checks: additive steps
/// T += delta_t, or doubling (delta_t, 2 delta_t, 4 delta_t, ...).  The cap
/// bounds T so a non-coalescing run aborts instead of spinning forever.
enum class ScheduleMode { Additive, Doubling };

struct CftpSchedule {
    ScheduleMode mode = ScheduleMode::Doubling;
    std::int64_t delta_t = 1;
    std::int64_t cap = std::int64_t{1} << 20;

    void validate() const {
        if (delta_t < 1) throw std::invalid_argument("CftpSchedule: delta_t must be >= 1");
        if (cap < delta_t) throw std::invalid_argument("CftpSchedule: cap below delta_t");
    }
    std::int64_t next(std::int64_t T) const {
        if (T == 0) return delta_t;
        return mode == ScheduleMode::Additive ? T + delta_t : 2 * T;
    }
};

/// Lookback grew past the schedule cap without coalescence.  Carries how far
/// the run got, to tell slow mixing apart from a broken update.
struct CapExceededError : std::runtime_error {
    CapExceededError(std::int64_t reached_, std::int64_t cap_, int rounds_)
        : std::runtime_error("coalescence lookback exceeded cap (reached T = " +
                             std::to_string(reached_) + ", cap " + std::to_string(cap_) +
                             " after " + std::to_string(rounds_) + " rounds)"),
          reached(reached_), cap(cap_), rounds(rounds_) {}
    std::int64_t reached;
    std::int64_t cap;
    int rounds;
};

/// Which start set a coalescence check evolves: every encoding, only the
/// all-up/all-down pair (monotone couplings only), or the admissible subset.
enum class TrackedMode { Full, ExtremalPair, AdmissibleOnly };

/// Outcome of one coalescence check at lookback T.
struct CoalescenceReport {
    std::int64_t lookback = 0;
    bool coalesced = false;          // survivors == 1
    std::uint64_t survivors = 0;     // distinct end values over tracked starts
    std::optional<State> value;      // common end value, present iff coalesced
    TrackedMode mode = TrackedMode::Full;
};

/// Optional remap applied to every start state before evolution (used to
/// fold non-admissible encodings onto a designated admissible one).
using StartRemap = std::function<State(State)>;

/// Evolve x through the update maps of times [t_begin, t_end), ascending.
State apply_window(const CoupledUpdate& u, const RngStream& rng, std::int64_t t_begin,
                   std::int64_t t_end, State x);

/// The composed map G_T = f_{-1} o ... o f_{-T} applied to x (G_0 = id).
State apply_G(const CoupledUpdate& u, const RngStream& rng, std::int64_t T, State x);

/// Evolve every start through G_T jointly (one shared (site, alpha) per time
/// step) and report the surviving values.
CoalescenceReport pi_subroutine(const CoupledUpdate& u, const RngStream& rng, std::int64_t T,
                                TrackedMode mode, std::uint64_t full_cap = std::uint64_t{1} << 20,
                                const StartRemap* remap = nullptr);

struct CftpResult {
    State value = 0;
    std::int64_t lookback = 0;  // T at which coalescence was detected
    int rounds = 0;
};

/// Exact sampling by coupling from the past: grow the lookback on the given
/// schedule, reusing the randomness of all earlier rounds (the stream is
/// indexed by absolute time), until every tracked start coalesces; the common
/// value is an exact draw from the chain's stationary distribution.
CftpResult cftp_sample(const CoupledUpdate& u, const CftpSchedule& schedule,
                       const RngStream& rng, TrackedMode mode = TrackedMode::Full,
                       std::uint64_t full_cap = std::uint64_t{1} << 20);

/// cftp_sample tracking only the extremal pair; refuses couplings that are
/// not provably monotone.
CftpResult monotone_cftp_sample(const CoupledUpdate& u, const CftpSchedule& schedule,
                                const RngStream& rng);

/// Median coalescence lookback of a few probe runs (doubling schedule); a
/// cheap way to seed delta_t before a production run.
std::int64_t estimate_delta_t(const CoupledUpdate& u, std::uint64_t seed, int probes = 8);

struct CoalescenceTimeEstimate {
    double tau_hat = 0.0;
    double stderr_ = 0.0;
    std::size_t completed = 0;
    std::size_t aborted = 0;
    bool ci_defined = false;  // false for single-run point estimates
};

/// Mean coalescence lookback over R independent runs (run r seeds its stream
/// with derive_seed(base_seed, r)); aborted runs are excluded and counted.
CoalescenceTimeEstimate estimate_coalescence_time(const CoupledUpdate& u,
                                                  const CftpSchedule& schedule, std::size_t R,
                                                  std::uint64_t base_seed,
                                                  TrackedMode mode = TrackedMode::Full,
                                                  int threads = 1);

using Observable = std::function<double(State)>;

/// Summary statistics of an observable series with the two error
/// conventions: independent realizations (err = stddev / sqrt(count)) or a
/// correlated forward trajectory (err = sqrt(2 tau_obs / count) * stddev).
struct ObservableStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation (n-1)
    double err = 0.0;
    std::size_t count = 0;
    bool realization_mode = true;

    // Forward-mode extras.
    double tau_obs = std::numeric_limits<double>::quiet_NaN();
    bool tau_obs_reliable = false;
    bool tau_obs_from_fit = false;  // false: integrated-autocorrelation fallback
    std::vector<std::pair<int, double>> autocorr;  // (lag, normalized C(lag))
};

/// Realization-mode statistics over independent samples; requires >= 2.
ObservableStats observable_mean(const std::vector<State>& samples, const Observable& obs);
ObservableStats observable_mean(const std::vector<double>& values);

/// Forward Markov chain baseline: discard `burnin` updates from x0, then
/// record the observable for `steps` updates.  tau_obs comes from a
/// log-linear fit of the autocorrelation C(s) ~ exp(-s / tau_obs) on lags
/// 1..lag_max, falling back to the integrated autocorrelation time when the
/// fit is degenerate, and floored at 1/2 (the uncorrelated-series value, at
/// which the error formula reduces to stddev / sqrt(steps)).
ObservableStats forward_mcmc(const CoupledUpdate& u, State x0, std::int64_t burnin,
                             std::int64_t steps, const Observable& obs, std::uint64_t seed,
                             int lag_max = 100);

}  // namespace cftpq
