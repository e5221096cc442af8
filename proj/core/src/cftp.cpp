#include "cftpq/cftp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cftpq/util.hpp"

namespace cftpq {

namespace {

// Shared per-step update parameters, resolved once so every tracked start is
// driven by the same (site, alpha).
struct StepPlan {
    int site;
    double alpha;
};

StepPlan plan_step(const CoupledUpdate& u, const RngStream& rng, std::int64_t t) {
    int site = site_at(u, rng, t);
    return {site, rng.alpha(t, site)};
}

void evolve_all(const CoupledUpdate& u, const RngStream& rng, std::int64_t T,
                std::vector<State>& states) {
    for (std::int64_t t = -T; t < 0; ++t) {
        StepPlan p = plan_step(u, rng, t);
        for (auto& s : states) s = apply_update(u, s, p.site, p.alpha);
    }
}

std::vector<State> tracked_starts(const CoupledUpdate& u, TrackedMode mode,
                                  std::uint64_t full_cap, const StartRemap* remap) {
    std::uint64_t N = u.state_count();
    std::vector<State> starts;
    switch (mode) {
        case TrackedMode::ExtremalPair: {
            if (!u.monotone())
                throw std::invalid_argument(
                    "extremal-pair tracking requires a monotone coupling "
                    "(ferromagnetic Ising heat bath)");
            State top = u.sites() == 0 ? 0 : (N - 1);
            starts = {State{0}, top};
            break;
        }
        case TrackedMode::AdmissibleOnly: {
            StateSpace space = u.state_space();
            if (N > full_cap)
                throw std::invalid_argument("admissible-only tracking: state space too large");
            for (State x = 0; x < N; ++x)
                if (!space.admissible || space.admissible(x)) starts.push_back(x);
            break;
        }
        case TrackedMode::Full: {
            if (N > full_cap)
                throw std::invalid_argument("full tracking: state space too large (" +
                                            std::to_string(N) + " states)");
            starts.resize(N);
            std::iota(starts.begin(), starts.end(), State{0});
            break;
        }
    }
    if (remap)
        for (auto& s : starts) s = (*remap)(s);
    return starts;
}

CoalescenceReport report_from(std::vector<State> finals, std::int64_t T, TrackedMode mode) {
    std::sort(finals.begin(), finals.end());
    finals.erase(std::unique(finals.begin(), finals.end()), finals.end());
    CoalescenceReport r;
    r.lookback = T;
    r.survivors = finals.size();
    r.coalesced = finals.size() == 1;
    if (r.coalesced) r.value = finals.front();
    r.mode = mode;
    return r;
}

}  // namespace

State apply_window(const CoupledUpdate& u, const RngStream& rng, std::int64_t t_begin,
                   std::int64_t t_end, State x) {
    if (t_begin > t_end) throw std::invalid_argument("apply_window: inverted range");
    if (t_end > 0) throw std::invalid_argument("apply_window: window must lie in the past");
    for (std::int64_t t = t_begin; t < t_end; ++t) x = step(u, rng, t, x);
    return x;
}

State apply_G(const CoupledUpdate& u, const RngStream& rng, std::int64_t T, State x) {
    if (T < 0) throw std::invalid_argument("apply_G: negative lookback");
    return apply_window(u, rng, -T, 0, x);
}

CoalescenceReport pi_subroutine(const CoupledUpdate& u, const RngStream& rng, std::int64_t T,
                                TrackedMode mode, std::uint64_t full_cap,
                                const StartRemap* remap) {
    if (T < 0) throw std::invalid_argument("pi_subroutine: negative lookback");
    u.validate();
    std::vector<State> states = tracked_starts(u, mode, full_cap, remap);
    evolve_all(u, rng, T, states);
    return report_from(std::move(states), T, mode);
}

CftpResult cftp_sample(const CoupledUpdate& u, const CftpSchedule& schedule,
                       const RngStream& rng, TrackedMode mode, std::uint64_t full_cap) {
    schedule.validate();
    u.validate();

    // Lookback 0 only coalesces when a single start is tracked; checking it
    // up front makes one-state spaces return immediately with T* = 0.
    {
        std::vector<State> starts = tracked_starts(u, mode, full_cap, nullptr);
        std::sort(starts.begin(), starts.end());
        starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
        if (starts.size() == 1) return {starts.front(), 0, 0};
    }

    // Grow the lookback until the coupled trajectories of every tracked
    // start merge.  Each round re-evaluates the window from scratch; the
    // stream is indexed by absolute time, so rounds agree on every update
    // they share and the randomness is never redrawn.
    std::int64_t T = 0;
    int rounds = 0;
    for (;;) {
        std::int64_t next_T = schedule.next(T);
        if (next_T > schedule.cap) throw CapExceededError(T, schedule.cap, rounds);
        T = next_T;
        ++rounds;
        CoalescenceReport rep = pi_subroutine(u, rng, T, mode, full_cap);
        if (rep.coalesced) return {*rep.value, T, rounds};
    }
}

CftpResult monotone_cftp_sample(const CoupledUpdate& u, const CftpSchedule& schedule,
                                const RngStream& rng) {
    return cftp_sample(u, schedule, rng, TrackedMode::ExtremalPair);
}

std::int64_t estimate_delta_t(const CoupledUpdate& u, std::uint64_t seed, int probes) {
    if (probes < 1) throw std::invalid_argument("estimate_delta_t: need at least one probe");
    CftpSchedule probe_schedule;  // doubling from 1
    TrackedMode mode = u.monotone() ? TrackedMode::ExtremalPair
                       : u.is_ising() ? TrackedMode::Full
                                      : TrackedMode::AdmissibleOnly;
    std::vector<std::int64_t> ts;
    for (int i = 0; i < probes; ++i) {
        RngStream rng(derive_seed(seed ^ 0x7067u, static_cast<std::uint64_t>(i)));
        ts.push_back(cftp_sample(u, probe_schedule, rng, mode).lookback);
    }
    std::sort(ts.begin(), ts.end());
    return std::max<std::int64_t>(1, ts[ts.size() / 2]);
}

CoalescenceTimeEstimate estimate_coalescence_time(const CoupledUpdate& u,
                                                  const CftpSchedule& schedule, std::size_t R,
                                                  std::uint64_t base_seed, TrackedMode mode,
                                                  int threads) {
    if (R == 0) throw std::invalid_argument("estimate_coalescence_time: R must be positive");
    std::vector<double> t_star(R, -1.0);
    parallel_for(R, threads, [&](std::size_t r) {
        RngStream rng(derive_seed(base_seed, r));
        try {
            t_star[r] = static_cast<double>(cftp_sample(u, schedule, rng, mode).lookback);
        } catch (const CapExceededError&) {
            t_star[r] = -1.0;  // excluded below
        }
    });

    CoalescenceTimeEstimate est;
    double sum = 0;
    for (double t : t_star) {
        if (t < 0) {
            ++est.aborted;
        } else {
            ++est.completed;
            sum += t;
        }
    }
    if (est.completed == 0)
        throw std::runtime_error("estimate_coalescence_time: every run exceeded the cap");
    est.tau_hat = sum / static_cast<double>(est.completed);
    if (est.completed >= 2) {
        double ss = 0;
        for (double t : t_star)
            if (t >= 0) ss += (t - est.tau_hat) * (t - est.tau_hat);
        est.stderr_ = std::sqrt(ss / static_cast<double>(est.completed - 1)) /
                      std::sqrt(static_cast<double>(est.completed));
        est.ci_defined = true;
    } else {
        est.stderr_ = std::numeric_limits<double>::infinity();
        est.ci_defined = false;
    }
    return est;
}

ObservableStats observable_mean(const std::vector<State>& samples, const Observable& obs) {
    std::vector<double> vals;
    vals.reserve(samples.size());
    for (State s : samples) vals.push_back(obs(s));
    return observable_mean(vals);
}

ObservableStats observable_mean(const std::vector<double>& values) {
    if (values.size() < 2)
        throw std::invalid_argument("observable_mean: need at least two samples");
    ObservableStats st;
    st.count = values.size();
    st.realization_mode = true;
    double n = static_cast<double>(values.size());
    st.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0;
    for (double v : values) ss += (v - st.mean) * (v - st.mean);
    st.stddev = std::sqrt(ss / (n - 1.0));
    st.err = st.stddev / std::sqrt(n);
    return st;
}

ObservableStats forward_mcmc(const CoupledUpdate& u, State x0, std::int64_t burnin,
                             std::int64_t steps, const Observable& obs, std::uint64_t seed,
                             int lag_max) {
    u.validate();
    if (burnin < 0) throw std::invalid_argument("forward_mcmc: negative burn-in");
    if (steps < 2) throw std::invalid_argument("forward_mcmc: need at least two steps");
    if (x0 >= u.state_count()) throw std::invalid_argument("forward_mcmc: start out of range");

    // The stream is past-indexed; a forward trajectory simply walks the
    // update maps at t = -1, -2, ... in order.
    RngStream rng(seed);
    State x = x0;
    std::int64_t t = -1;
    for (std::int64_t i = 0; i < burnin; ++i) x = step(u, rng, t--, x);
    std::vector<double> v(static_cast<std::size_t>(steps));
    for (auto& vi : v) {
        x = step(u, rng, t--, x);
        vi = obs(x);
    }

    ObservableStats st;
    st.count = v.size();
    st.realization_mode = false;
    double n = static_cast<double>(v.size());
    st.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0;
    for (double vi : v) ss += (vi - st.mean) * (vi - st.mean);
    st.stddev = std::sqrt(ss / (n - 1.0));

    if (st.stddev == 0.0) {
        // Constant series: no correlation structure to fit.
        st.err = 0.0;
        return st;
    }

    int max_lag = std::min<std::int64_t>(lag_max, steps / 4);
    double c0 = ss / n;
    std::vector<double> rho(static_cast<std::size_t>(max_lag) + 1, 0.0);
    rho[0] = 1.0;
    for (int s = 1; s <= max_lag; ++s) {
        double c = 0;
        for (std::size_t i = 0; i + s < v.size(); ++i)
            c += (v[i] - st.mean) * (v[i + s] - st.mean);
        c /= static_cast<double>(v.size() - s);
        rho[s] = c / c0;
        st.autocorr.emplace_back(s, rho[s]);
    }

    // Exponential fit on the initial decay: least squares of log rho(s)
    // against s over the leading lags that stand above the noise floor.
    double floor_ = std::max(0.02, 4.0 / std::sqrt(n));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int pts = 0;
    for (int s = 1; s <= max_lag; ++s) {
        if (rho[s] <= floor_) break;
        double y = std::log(rho[s]);
        sx += s;
        sy += y;
        sxx += static_cast<double>(s) * s;
        sxy += s * y;
        ++pts;
    }
    double tau_fit = 0.0;
    bool fit_ok = false;
    if (pts >= 2) {
        double denom = pts * sxx - sx * sx;
        double slope = (pts * sxy - sx * sy) / denom;
        if (slope < 0) {
            tau_fit = -1.0 / slope;
            fit_ok = true;
        }
    }

    // Integrated autocorrelation time with a self-consistent window
    // (stop once the window exceeds ~5 tau); the fallback when the
    // exponential fit has nothing to work with.
    double tau_int = 0.5;
    for (int s = 1; s <= max_lag; ++s) {
        if (rho[s] <= 0) break;
        tau_int += rho[s];
        if (s >= 5.0 * tau_int) break;
    }

    st.tau_obs_from_fit = fit_ok;
    st.tau_obs = fit_ok ? tau_fit : tau_int;
    // An uncorrelated series has tau_obs = 1/2 (err reduces to the plain
    // standard error); fits below that are noise on an exactly-zero
    // autocorrelation, so clamp from below.
    if (st.tau_obs < 0.5) st.tau_obs = 0.5;
    st.tau_obs_reliable = fit_ok || tau_int > 0;
    st.err = std::sqrt(2.0 * st.tau_obs / n) * st.stddev;
    return st;
}

}  // namespace cftpq
