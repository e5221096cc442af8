#include "cftpq/costs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "cftpq/util.hpp"

namespace cftpq {

namespace {

constexpr std::uint64_t kSynthMapTag = 0x73796e74;   // deviant-position draws
constexpr std::uint64_t kClassicalTag = 0x636c6173;  // classical measurement draws
constexpr std::uint64_t kQuantumTag = 0x71726e67;    // search-side draws

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void require_point(double n_states, double marked) {
    if (!(n_states >= 1.0)) throw std::invalid_argument("cost model: N must be >= 1");
    if (!(marked >= 1.0 && marked <= n_states))
        throw std::invalid_argument("cost model: M must satisfy 1 <= M <= N");
}

std::int64_t schedule_steps(const CftpSchedule& schedule, int rounds) {
    std::int64_t total = 0, T = 0;
    for (int i = 0; i < rounds; ++i) {
        T = schedule.next(T);
        total += T;
    }
    return total;
}

std::int64_t penultimate_lookback(const CftpSchedule& schedule, int rounds) {
    std::int64_t T = 0;
    for (int i = 0; i + 1 < rounds; ++i) T = schedule.next(T);
    return T;
}

}  // namespace

void CostModel::validate() const {
    if (!(a >= 0.0)) throw std::invalid_argument("cost model: a must be >= 0");
    if (!(c > 0.0)) throw std::invalid_argument("cost model: c must be > 0");
    if (b && !(*b > 0.0 && *b <= 1.0))
        throw std::invalid_argument("cost model: b must lie in (0, 1]");
    if (!(perstep > 0.0)) throw std::invalid_argument("cost model: perstep must be > 0");
}

double CostModel::coalescence_scale(double n_states) const {
    return regime == MixingRegime::Rapid ? std::pow(std::log(n_states), a)
                                         : std::pow(n_states, c);
}

double classical_cost(double n_states, double marked, const CostModel& model) {
    model.validate();
    require_point(n_states, marked);
    double g = model.coalescence_scale(n_states);
    if (model.b) return model.perstep * (n_states + g * std::pow(n_states, *model.b));
    return model.perstep * g * n_states / marked;
}

double quantum_cost(double n_states, double marked, const CostModel& model) {
    model.validate();
    require_point(n_states, marked);
    double g = model.coalescence_scale(n_states);
    if (model.b) return model.perstep * g * std::sqrt(n_states);
    return model.perstep * g * std::sqrt(n_states / marked);
}

double speedup(double n_states, double marked, const CostModel& model) {
    return classical_cost(n_states, marked, model) / quantum_cost(n_states, marked, model);
}

double classical_exponent(const CostModel& model) {
    model.validate();
    if (model.regime == MixingRegime::Rapid) return 1.0;
    return model.b ? std::max(model.c + *model.b, 1.0) : model.c + 1.0;
}

double quantum_exponent(const CostModel& model) {
    model.validate();
    return (model.regime == MixingRegime::Rapid ? 0.0 : model.c) + 0.5;
}

bool polynomial_gain(const CostModel& model) {
    // Strict loss requires max(c+b, 1) < c + 1/2, which happens exactly when
    // b < 1/2 and c > 1/2; ties (b = 1/2 or c = 1/2) keep the flag set.
    return !(classical_exponent(model) < quantum_exponent(model));
}

std::vector<BenchRecord> run_detection_benchmark(const std::vector<BenchPoint>& grid,
                                                 std::uint64_t seed,
                                                 const DetectionBenchOptions& opt) {
    if (grid.empty()) throw std::invalid_argument("detection benchmark: empty grid");
    if (opt.trials < 1) throw std::invalid_argument("detection benchmark: trials must be >= 1");
    for (const auto& p : grid) {
        if (p.n_states < 2 || p.marked < 1 || p.marked > p.n_states)
            throw std::invalid_argument("detection benchmark: need 2 <= N and 1 <= M <= N");
    }

    std::vector<BenchRecord> out(grid.size());
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const BenchPoint& p = grid[gi];
        auto cap = static_cast<std::uint64_t>(
            std::ceil(opt.classical_cap_mult * static_cast<double>(p.n_states)));

        std::vector<double> classical(opt.trials), quantum(opt.trials);
        std::vector<double> cwall(opt.trials), qwall(opt.trials);
        parallel_for(static_cast<std::size_t>(opt.trials), opt.threads, [&](std::size_t ti) {
            RngStream rs(derive_seed(seed, (static_cast<std::uint64_t>(gi) << 32) | ti));

            // Deviant positions: exactly M distinct indices map to 1, the rest
            // to the reference value 0.
            std::vector<State> image(p.n_states, 0);
            UniformSequence synth(rs.child(kSynthMapTag));
            std::unordered_set<std::uint64_t> chosen;
            while (chosen.size() < p.marked) {
                auto x = static_cast<std::uint64_t>(synth.next() *
                                                    static_cast<double>(p.n_states));
                chosen.insert(std::min(x, p.n_states - 1));
            }
            for (std::uint64_t x : chosen) image[x] = 1;

            double t0 = now_s();
            UniformSequence cs(rs.child(kClassicalTag));
            std::uint64_t draws = 0;
            while (draws < cap) {
                auto x = static_cast<std::uint64_t>(cs.next() *
                                                    static_cast<double>(p.n_states));
                ++draws;
                if (image[std::min(x, p.n_states - 1)] != 0) break;
            }
            classical[ti] = static_cast<double>(draws);
            double t1 = now_s();

            DetectionProblem problem{std::move(image), 0};
            UniformSequence qs(rs.child(kQuantumTag));
            DetectionOutcome det = detect_noncoalesced(problem, qs, opt.epsilon, opt.detection);
            quantum[ti] = static_cast<double>(det.ledger.oracle_calls);
            cwall[ti] = t1 - t0;
            qwall[ti] = now_s() - t1;
        });

        BenchRecord& rec = out[gi];
        rec.n_states = p.n_states;
        rec.marked = p.marked;
        for (int ti = 0; ti < opt.trials; ++ti) {
            rec.classical_ops += classical[ti];
            rec.quantum_oracle_calls += quantum[ti];
            rec.classical_wall_s += cwall[ti];
            rec.quantum_wall_s += qwall[ti];
        }
        rec.classical_ops /= opt.trials;
        rec.quantum_oracle_calls /= opt.trials;
    }
    return out;
}

BenchRecord run_end_to_end_benchmark(const CoupledUpdate& u, const CftpSchedule& schedule,
                                     std::uint64_t seed, const EndToEndOptions& opt) {
    u.validate();
    schedule.validate();
    if (opt.trials < 1) throw std::invalid_argument("end-to-end benchmark: trials must be >= 1");

    std::uint64_t tracked;
    switch (opt.mode) {
        case TrackedMode::ExtremalPair: tracked = 2; break;
        case TrackedMode::AdmissibleOnly: tracked = u.state_space().admissible_count(); break;
        default: tracked = u.state_count(); break;
    }

    StartRemap remap;
    QuantumOptions qopt;
    if (!u.is_ising()) {
        remap = admissible_oracle_wrap(u, first_admissible_state(u.hardcore()));
        qopt.remap = &remap;
    }

    std::vector<double> cops(opt.trials), survivors(opt.trials), lookbacks(opt.trials);
    std::vector<double> qcalls(opt.trials);

    double t0 = now_s();
    parallel_for(static_cast<std::size_t>(opt.trials), opt.threads, [&](std::size_t ti) {
        RngStream rs(derive_seed(seed, ti));
        CftpResult res = cftp_sample(u, schedule, rs, opt.mode);
        cops[ti] = static_cast<double>(tracked) *
                   static_cast<double>(schedule_steps(schedule, res.rounds));
        lookbacks[ti] = static_cast<double>(res.lookback);
        // Replay the map at the last failed lookback to count how many
        // distinct images the check had to tell apart.
        std::int64_t t_prev = penultimate_lookback(schedule, res.rounds);
        survivors[ti] =
            static_cast<double>(pi_subroutine(u, rs, t_prev, opt.mode).survivors);
    });
    double t1 = now_s();
    parallel_for(static_cast<std::size_t>(opt.trials), opt.threads, [&](std::size_t ti) {
        RngStream rs(derive_seed(seed, ti));  // same maps as the classical run
        QuantumCftpResult res = quantum_cftp_sample(u, schedule, rs, opt.epsilon, qopt);
        qcalls[ti] = static_cast<double>(res.ledger.oracle_calls);
    });
    double t2 = now_s();

    BenchRecord rec;
    rec.n_states = u.state_count();
    rec.marked = 0;
    rec.classical_wall_s = t1 - t0;
    rec.quantum_wall_s = t2 - t1;
    double lb = 0;
    for (int ti = 0; ti < opt.trials; ++ti) {
        rec.classical_ops += cops[ti];
        rec.quantum_oracle_calls += qcalls[ti];
        rec.mean_survivors += survivors[ti];
        lb += lookbacks[ti];
    }
    rec.classical_ops /= opt.trials;
    rec.quantum_oracle_calls /= opt.trials;
    rec.mean_survivors /= opt.trials;
    rec.lookback = static_cast<std::int64_t>(std::llround(lb / opt.trials));
    return rec;
}

SlopeFit fit_loglog(const std::vector<std::pair<double, double>>& points) {
    std::vector<std::pair<double, double>> logs;
    logs.reserve(points.size());
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0))
            throw std::invalid_argument("log-log fit: coordinates must be positive");
        logs.emplace_back(std::log(x), std::log(y));
    }
    double xmin = 0, xmax = 0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        xmin = i ? std::min(xmin, logs[i].first) : logs[i].first;
        xmax = i ? std::max(xmax, logs[i].first) : logs[i].first;
    }
    if (logs.size() < 2 || !(xmax > xmin))
        throw std::invalid_argument("log-log fit: need at least two distinct abscissae");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    auto n = static_cast<double>(logs.size());
    for (const auto& [lx, ly] : logs) {
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    SlopeFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

double fitted_multiplier(const std::vector<std::pair<double, double>>& measured_predicted) {
    if (measured_predicted.empty())
        throw std::invalid_argument("multiplier fit: no samples");
    double acc = 0;
    for (const auto& [meas, pred] : measured_predicted) {
        if (!(meas > 0.0) || !(pred > 0.0))
            throw std::invalid_argument("multiplier fit: samples must be positive");
        acc += std::log(meas / pred);
    }
    return std::exp(acc / static_cast<double>(measured_predicted.size()));
}

BenchSummary summarize_detection(const std::vector<BenchRecord>& records) {
    std::vector<std::pair<double, double>> cpts, qpts, ratio;
    for (const auto& r : records) {
        auto n = static_cast<double>(r.n_states);
        cpts.emplace_back(n, r.classical_ops);
        qpts.emplace_back(n, r.quantum_oracle_calls);
        ratio.emplace_back(r.quantum_oracle_calls,
                           std::sqrt(n / static_cast<double>(r.marked)));
    }
    BenchSummary s;
    s.classical = fit_loglog(cpts);
    s.quantum = fit_loglog(qpts);
    s.quantum_multiplier = fitted_multiplier(ratio);
    return s;
}

}  // namespace cftpq
