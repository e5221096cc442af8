#include "cftpq/grover.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace cftpq {

namespace {

constexpr std::uint64_t kMeasureStreamTag = 0x6d656173ULL;  // per-(seed, T) measurement draws

void require_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("epsilon must lie strictly between 0 and 1");
}

int passes_for(double epsilon) {
    return static_cast<int>(std::ceil(std::log2(1.0 / epsilon)));
}

}  // namespace

double AmplitudeVector::norm() const {
    double s = 0;
    for (const auto& a : amp) s += std::norm(a);
    return std::sqrt(s);
}

void AmplitudeVector::check_norm(double tol) const {
    if (std::abs(norm() - 1.0) > tol)
        throw std::runtime_error("AmplitudeVector: norm drifted from 1");
}

AmplitudeVector uniform_state_of_size(std::uint64_t size, std::uint64_t cap) {
    if (size == 0) throw std::invalid_argument("uniform_state: empty register");
    if (size > cap)
        throw std::invalid_argument("uniform_state: register of " + std::to_string(size) +
                                    " states exceeds the simulation cap");
    AmplitudeVector v;
    v.amp.assign(size, std::complex<double>(1.0 / std::sqrt(static_cast<double>(size)), 0.0));
    return v;
}

AmplitudeVector uniform_state(int qubits, int cap_qubits) {
    if (qubits < 0 || qubits > 62) throw std::invalid_argument("uniform_state: bad qubit count");
    if (qubits > cap_qubits)
        throw std::invalid_argument("uniform_state: qubit count exceeds the simulation cap");
    return uniform_state_of_size(std::uint64_t{1} << qubits,
                                 std::uint64_t{1} << std::min(cap_qubits, 62));
}

std::uint64_t DetectionProblem::marked_count() const {
    std::uint64_t m = 0;
    for (State y : image)
        if (y != reference) ++m;
    return m;
}

void oracle_phase_flip(AmplitudeVector& state, const DetectionProblem& problem,
                       QueryLedger& ledger) {
    if (state.size() != problem.size())
        throw std::invalid_argument("oracle_phase_flip: register size mismatch");
    for (std::size_t x = 0; x < state.size(); ++x)
        if (problem.image[x] != problem.reference) state.amp[x] = -state.amp[x];
    ledger.oracle_calls += 1;
    ledger.map_evaluations += problem.size();  // each simulated call scans the image table
}

void diffusion(AmplitudeVector& state) {
    std::complex<double> mean(0.0, 0.0);
    for (const auto& a : state.amp) mean += a;
    mean /= static_cast<double>(state.size());
    for (auto& a : state.amp) a = 2.0 * mean - a;
}

double success_probability(std::uint64_t N, std::uint64_t M, std::int64_t k) {
    if (N == 0) throw std::invalid_argument("success_probability: N must be positive");
    if (M == 0)
        throw std::invalid_argument("success_probability: undefined for an empty marked set");
    if (M > N) throw std::invalid_argument("success_probability: M exceeds N");
    if (k < 0) throw std::invalid_argument("success_probability: negative iteration count");
    double theta = std::asin(std::sqrt(static_cast<double>(M) / static_cast<double>(N)));
    double s = std::sin((2.0 * static_cast<double>(k) + 1.0) * theta);
    return s * s;
}

double marked_mass(const AmplitudeVector& state, const DetectionProblem& problem) {
    if (state.size() != problem.size())
        throw std::invalid_argument("marked_mass: register size mismatch");
    double p = 0;
    for (std::size_t x = 0; x < state.size(); ++x)
        if (problem.marked(x)) p += std::norm(state.amp[x]);
    return p;
}

State measure(const AmplitudeVector& state, double u) {
    if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("measure: u must lie in [0, 1)");
    double total = 0;
    for (const auto& a : state.amp) total += std::norm(a);
    double target = u * total;
    double acc = 0;
    for (std::size_t x = 0; x < state.size(); ++x) {
        acc += std::norm(state.amp[x]);
        if (target < acc) return x;
    }
    return state.size() - 1;
}

State measure_second_register(const std::vector<State>& image, UniformSequence& rng,
                              QueryLedger* ledger) {
    if (image.empty()) throw std::invalid_argument("measure_second_register: empty map");
    auto x = static_cast<std::uint64_t>(rng.next() * static_cast<double>(image.size()));
    x = std::min<std::uint64_t>(x, image.size() - 1);
    if (ledger) {
        ledger->map_evaluations += 1;
        ledger->measurements += 1;
    }
    return image[x];
}

DetectionOutcome detect_noncoalesced(const DetectionProblem& problem, UniformSequence& rng,
                                     double epsilon, const DetectionOptions& opt) {
    require_epsilon(epsilon);
    if (problem.image.empty()) throw std::invalid_argument("detect_noncoalesced: empty map");
    if (opt.growth <= 1.0)
        throw std::invalid_argument("detect_noncoalesced: growth factor must exceed 1");

    std::uint64_t N = problem.size();
    double sqrt_n = std::sqrt(static_cast<double>(N));
    int passes = passes_for(epsilon);
    auto pass_cap = static_cast<std::uint64_t>(std::ceil(opt.pass_cap_mult * sqrt_n));
    std::uint64_t budget =
        opt.budget ? opt.budget : pass_cap * static_cast<std::uint64_t>(passes);

    DetectionOutcome out;
    for (int pass = 0; pass < passes; ++pass) {
        double m = 1.0;
        std::uint64_t used = 0;
        while (used < pass_cap && out.ledger.oracle_calls < budget) {
            auto k = static_cast<std::uint64_t>(rng.next() * m);
            AmplitudeVector st = uniform_state_of_size(N);
            for (std::uint64_t j = 0; j < k; ++j) {
                oracle_phase_flip(st, problem, out.ledger);
                diffusion(st);
            }
            State x = measure(st, rng.next());
            out.ledger.measurements += 1;
            // Verifying the measured candidate costs one more query of the map,
            // the same accounting the unknown-count search analysis uses.
            out.ledger.oracle_calls += 1;
            out.ledger.map_evaluations += 1;
            used += k + 1;
            if (problem.marked(x)) {
                out.witness = x;
                return out;
            }
            m = std::min(m * opt.growth, std::max(sqrt_n, 1.0));
        }
    }
    return out;  // nothing verified: wrong with probability <= epsilon when M >= 1
}

std::vector<State> evaluate_map(const CoupledUpdate& u, const RngStream& rng, std::int64_t T,
                                const StartRemap* remap) {
    if (T < 0) throw std::invalid_argument("evaluate_map: negative lookback");
    std::uint64_t N = u.state_count();
    std::vector<State> image(N);
    for (std::uint64_t x = 0; x < N; ++x) image[x] = remap ? (*remap)(x) : x;
    for (std::int64_t t = -T; t < 0; ++t) {
        int site = site_at(u, rng, t);
        double alpha = rng.alpha(t, site);
        for (auto& s : image) s = apply_update(u, s, site, alpha);
    }
    return image;
}

QuantumVerdict quantum_verdict_for_image(std::vector<State> image, UniformSequence& ms,
                                         double epsilon, const QuantumOptions& opt) {
    require_epsilon(epsilon);
    if (image.size() > opt.amp_cap)
        throw std::invalid_argument("quantum verdict: register exceeds simulation cap");

    QuantumVerdict v;
    v.report.mode = opt.remap ? TrackedMode::AdmissibleOnly : TrackedMode::Full;

    // First measurement pins the reference value y1; a few cheap repeats
    // often expose non-coalescence without touching the oracle at all.
    State y1 = measure_second_register(image, ms, &v.ledger);
    for (int i = 1; i < std::max(1, opt.premeasure); ++i) {
        if (measure_second_register(image, ms, &v.ledger) != y1) {
            v.report.coalesced = false;
            v.report.survivors = 2;  // witnessed distinct images
            return v;
        }
    }

    DetectionProblem problem{std::move(image), y1};
    DetectionOutcome det = detect_noncoalesced(problem, ms, epsilon, opt.detection);
    v.ledger.merge(det.ledger);
    if (det.witness) {
        v.report.coalesced = false;
        v.report.survivors = 2;
    } else {
        v.report.coalesced = true;
        v.report.survivors = 1;
        v.report.value = y1;
    }
    return v;
}

QuantumVerdict quantum_pi_subroutine(const CoupledUpdate& u, const RngStream& rng,
                                     std::int64_t T, double epsilon,
                                     const QuantumOptions& opt) {
    require_epsilon(epsilon);
    u.validate();
    if (u.state_count() > opt.amp_cap)
        throw std::invalid_argument("quantum_pi_subroutine: register exceeds simulation cap");

    std::vector<State> image = evaluate_map(u, rng, T, opt.remap);

    // Measurement randomness is keyed by (stream, T): replays are exact and
    // never collide with the update alphas.
    UniformSequence ms(rng.child(kMeasureStreamTag ^ static_cast<std::uint64_t>(T)));

    QuantumVerdict v = quantum_verdict_for_image(std::move(image), ms, epsilon, opt);
    v.report.lookback = T;
    v.ledger.step_cost = T;
    return v;
}

QuantumCftpResult quantum_cftp_sample(const CoupledUpdate& u, const CftpSchedule& schedule,
                                      const RngStream& rng, double epsilon,
                                      const QuantumOptions& opt) {
    schedule.validate();
    require_epsilon(epsilon);
    u.validate();

    QuantumCftpResult res;
    if (u.state_count() == 1) return res;  // single encoding: coalesced at T = 0

    std::int64_t T = 0;
    for (;;) {
        std::int64_t next_T = schedule.next(T);
        if (next_T > schedule.cap) throw CapExceededError(T, schedule.cap, res.rounds);
        T = next_T;
        ++res.rounds;
        QuantumVerdict v = quantum_pi_subroutine(u, rng, T, epsilon, opt);
        res.ledger.merge(v.ledger);
        if (v.report.coalesced) {
            res.value = *v.report.value;
            res.lookback = T;
            return res;
        }
    }
}

StartRemap admissible_oracle_wrap(const CoupledUpdate& u, State x_a) {
    if (u.is_ising())
        throw std::invalid_argument(
            "admissible_oracle_wrap: model has no admissibility constraint");
    HardCoreModel m = u.hardcore();
    if (!is_admissible(m, x_a))
        throw std::invalid_argument("admissible_oracle_wrap: x_a must be admissible");
    return [m, x_a](State x) { return is_admissible(m, x) ? x : x_a; };
}

}  // namespace cftpq
