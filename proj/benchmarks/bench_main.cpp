// Microbenchmarks for the hot paths: keyed variate generation, single-site
// updates, enumerated and search-based coalescence checks, and one iteration
// of the amplitude-amplification simulator.

#include <benchmark/benchmark.h>

#include <cstdint>

#include "cftpq/cftp.hpp"
#include "cftpq/grover.hpp"
#include "cftpq/lattice.hpp"
#include "cftpq/models.hpp"
#include "cftpq/rng.hpp"

namespace {

using namespace cftpq;

CoupledUpdate ising_update(int width, int height, double beta) {
    CoupledUpdate u;
    u.model = IsingModel{make_square(width, height, false), 1.0, 0.0, beta};
    u.schedule = SiteSchedule::RandomSite;
    return u;
}

void BM_KeyedVariate(benchmark::State& state) {
    RngStream rng(42);
    std::int64_t t = -1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(rng.alpha(t, 0));
        t = t == -(1 << 20) ? -1 : t - 1;
    }
}
BENCHMARK(BM_KeyedVariate);

void BM_SiteUpdate(benchmark::State& state) {
    CoupledUpdate u = ising_update(4, 4, 0.4);
    RngStream rng(7);
    State x = 0;
    std::int64_t t = -1;
    for (auto _ : state) {
        x = step(u, rng, t, x);
        t = t == -(1 << 20) ? -1 : t - 1;
        benchmark::DoNotOptimize(x);
    }
}
BENCHMARK(BM_SiteUpdate);

void BM_EnumeratedCheck(benchmark::State& state) {
    CoupledUpdate u = ising_update(2, 3, 0.4);
    std::int64_t T = state.range(0);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto report = pi_subroutine(u, RngStream(derive_seed(1, seed++)), T, TrackedMode::Full);
        benchmark::DoNotOptimize(report.survivors);
    }
    state.SetItemsProcessed(state.iterations() * u.state_count() * T);
}
BENCHMARK(BM_EnumeratedCheck)->Arg(16)->Arg(64)->Arg(256);

void BM_SearchedCheck(benchmark::State& state) {
    CoupledUpdate u = ising_update(2, 3, 0.4);
    std::int64_t T = state.range(0);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto verdict = quantum_pi_subroutine(u, RngStream(derive_seed(2, seed++)), T, 1e-3);
        benchmark::DoNotOptimize(verdict.ledger.oracle_calls);
    }
}
BENCHMARK(BM_SearchedCheck)->Arg(16)->Arg(64)->Arg(256);

void BM_AmplificationIteration(benchmark::State& state) {
    std::uint64_t n = state.range(0);
    DetectionProblem prob;
    prob.image.assign(n, 0);
    prob.image[n / 2] = 1;
    AmplitudeVector reg = uniform_state_of_size(n);
    QueryLedger ledger;
    for (auto _ : state) {
        oracle_phase_flip(reg, prob, ledger);
        diffusion(reg);
        benchmark::DoNotOptimize(reg.amp.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_AmplificationIteration)->Arg(1 << 8)->Arg(1 << 12)->Arg(1 << 16);

void BM_UnknownCountDetection(benchmark::State& state) {
    std::uint64_t n = state.range(0);
    DetectionProblem prob;
    prob.image.assign(n, 0);
    prob.image[n / 3] = 1;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        UniformSequence ms(RngStream(derive_seed(3, seed++)).child(0xbe));
        auto outcome = detect_noncoalesced(prob, ms, 1e-3);
        benchmark::DoNotOptimize(outcome.ledger.oracle_calls);
    }
}
BENCHMARK(BM_UnknownCountDetection)->Arg(1 << 8)->Arg(1 << 10)->Arg(1 << 12);

}  // namespace

BENCHMARK_MAIN();
