// Command-line front end: exact sampling runs, time-scale reports, detector
// probes, scaling benchmarks, and the invariant suite.  All results are
// plain JSON-lines / CSV files stamped with (config hash, seed); any record
// can be reproduced bitwise from those two values.
//
// Exit codes: 0 success, 1 validation error, 2 runtime abort (lookback cap
// exceeded), 3 invariant failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cftpq/cftp.hpp"
#include "cftpq/chain.hpp"
#include "cftpq/config.hpp"
#include "cftpq/costs.hpp"
#include "cftpq/grover.hpp"
#include "cftpq/models.hpp"
#include "cftpq/util.hpp"

namespace {

using nlohmann::json;
using namespace cftpq;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitAbort = 2;
constexpr int kExitInvariant = 3;

constexpr std::uint64_t kProbeTag = 0x6474;     // delta_t probe stream
constexpr std::uint64_t kTauHatTag = 0x7468;    // coalescence-time replications
constexpr std::uint64_t kForwardTag = 0x6677;   // forward-run stream
constexpr std::uint64_t kDetectTag = 0x7164;    // map-file detector stream
constexpr std::uint64_t kValidateTag = 0x766c;  // invariant-suite sampling

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;  // empty: use the config's output.dir
    int threads = 1;
    std::string format = "json";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required) {
    auto* copt = cmd->add_option("--config", o.config_path, "JSON run configuration file");
    if (config_required) copt->required();
    cmd->add_option("--seed", o.seed, "Override the sampler seed from the config");
    cmd->add_option("--out", o.out_dir, "Output directory (overrides the config)");
    cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1, 512));
    cmd->add_option("--format", o.format, "Stdout summary format")
        ->check(CLI::IsMember({"json", "csv"}));
}

std::filesystem::path prepare_out_dir(const RunConfig& cfg, const CommonOpts& o) {
    std::filesystem::path dir = o.out_dir.empty() ? cfg.output.dir : o.out_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<std::pair<std::string, Observable>> build_observables(const RunConfig& cfg) {
    std::vector<std::pair<std::string, Observable>> out;
    for (const auto& name : cfg.observables) out.emplace_back(name, cfg.build_observable(name));
    return out;
}

void write_lines(const std::filesystem::path& path, const std::vector<json>& records) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open output file " + path.string());
    for (const auto& r : records) f << r.dump() << "\n";
}

json stats_to_json(const ObservableStats& s) {
    json j{{"count", s.count}, {"mean", s.mean}, {"stddev", s.stddev}, {"err", s.err}};
    if (!s.realization_mode) {
        j["tau_obs"] = s.tau_obs;
        j["tau_obs_reliable"] = s.tau_obs_reliable;
        j["tau_obs_from_fit"] = s.tau_obs_from_fit;
    }
    return j;
}

void print_summary(const CommonOpts& o, const json& summary, const std::string& csv_text) {
    if (o.format == "csv" && !csv_text.empty())
        std::cout << csv_text;
    else
        std::cout << summary.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// sample / qsample

json sample_record(const RunConfig& cfg, const CoupledUpdate& u, const CftpSchedule& sched,
                   TrackedMode mode,
                   const std::vector<std::pair<std::string, Observable>>& obs,
                   std::uint64_t record_seed) {
    json rec{{"kind", "sample"}, {"config", cfg.hash}, {"seed", record_seed}};
    RngStream rs(record_seed);
    try {
        CftpResult r = cftp_sample(u, sched, rs, mode);
        rec["value"] = r.value;
        rec["lookback"] = r.lookback;
        rec["rounds"] = r.rounds;
        json ov = json::object();
        for (const auto& [name, fn] : obs) ov[name] = fn(r.value);
        rec["obs"] = ov;
    } catch (const CapExceededError& e) {
        rec["aborted"] = true;
        rec["reached"] = e.reached;
        rec["rounds"] = e.rounds;
    }
    return rec;
}

json qsample_record(const RunConfig& cfg, const CoupledUpdate& u, const CftpSchedule& sched,
                    const QuantumOptions& qopt,
                    const std::vector<std::pair<std::string, Observable>>& obs,
                    std::uint64_t record_seed) {
    json rec{{"kind", "qsample"},
             {"config", cfg.hash},
             {"seed", record_seed},
             {"epsilon", cfg.quantum.epsilon}};
    RngStream rs(record_seed);
    try {
        QuantumCftpResult r = quantum_cftp_sample(u, sched, rs, cfg.quantum.epsilon, qopt);
        rec["value"] = r.value;
        rec["lookback"] = r.lookback;
        rec["rounds"] = r.rounds;
        rec["oracle_calls"] = r.ledger.oracle_calls;
        rec["map_evaluations"] = r.ledger.map_evaluations;
        rec["measurements"] = r.ledger.measurements;
        rec["step_cost"] = r.ledger.step_cost;
        json ov = json::object();
        for (const auto& [name, fn] : obs) ov[name] = fn(r.value);
        rec["obs"] = ov;
    } catch (const CapExceededError& e) {
        rec["aborted"] = true;
        rec["reached"] = e.reached;
        rec["rounds"] = e.rounds;
    }
    return rec;
}

CftpSchedule resolve_schedule(const RunConfig& cfg, const CoupledUpdate& u,
                              std::uint64_t seed) {
    CftpSchedule sched = cfg.build_schedule();
    if (cfg.sampler.delta_t == 0) sched.delta_t = estimate_delta_t(u, derive_seed(seed, kProbeTag));
    return sched;
}

std::string stats_csv(const RunConfig& cfg, std::uint64_t seed,
                      const std::vector<std::pair<std::string, ObservableStats>>& stats) {
    std::ostringstream csv;
    csv << "observable,count,mean,stddev,err,config,seed\n";
    for (const auto& [name, st] : stats)
        csv << name << "," << st.count << "," << format_double(st.mean) << ","
            << format_double(st.stddev) << "," << format_double(st.err) << "," << cfg.hash
            << "," << seed << "\n";
    return csv.str();
}

int run_sampler_command(const CommonOpts& o, std::optional<std::uint64_t> replay,
                        bool quantum) {
    RunConfig cfg = load_run_config(o.config_path);
    std::uint64_t seed = o.seed.value_or(cfg.sampler.seed);
    CoupledUpdate u = cfg.build_update();
    TrackedMode mode = cfg.build_tracked_mode(u);
    CftpSchedule sched = resolve_schedule(cfg, u, seed);
    auto observables = build_observables(cfg);

    StartRemap remap;
    QuantumOptions qopt = cfg.build_quantum_options();
    if (quantum && !u.is_ising()) {
        remap = admissible_oracle_wrap(u, first_admissible_state(u.hardcore()));
        qopt.remap = &remap;
    }

    auto make_record = [&](std::uint64_t record_seed) {
        return quantum ? qsample_record(cfg, u, sched, qopt, observables, record_seed)
                       : sample_record(cfg, u, sched, mode, observables, record_seed);
    };

    if (replay) {
        json rec = make_record(*replay);
        std::cout << rec.dump() << "\n";
        return rec.contains("aborted") ? kExitAbort : kExitOk;
    }

    auto R = static_cast<std::size_t>(cfg.sampler.samples);
    std::vector<json> records(R);
    parallel_for(R, o.threads,
                 [&](std::size_t r) { records[r] = make_record(derive_seed(seed, r)); });

    std::size_t aborted = 0;
    double mean_lookback = 0;
    std::unordered_map<std::string, std::vector<double>> series;
    for (const auto& rec : records) {
        if (rec.contains("aborted")) {
            ++aborted;
            continue;
        }
        mean_lookback += rec.at("lookback").get<double>();
        for (const auto& [name, v] : rec.at("obs").items())
            series[name].push_back(v.get<double>());
    }
    std::size_t completed = R - aborted;
    if (completed) mean_lookback /= static_cast<double>(completed);

    std::vector<std::pair<std::string, ObservableStats>> stats;
    for (const auto& [name, fn] : observables)
        if (series[name].size() >= 2) stats.emplace_back(name, observable_mean(series[name]));

    std::filesystem::path dir = prepare_out_dir(cfg, o);
    std::string prefix = cfg.output.prefix;
    std::filesystem::path samples_path =
        dir / (prefix + (quantum ? "_qsamples.jsonl" : "_samples.jsonl"));
    std::filesystem::path stats_path =
        dir / (prefix + (quantum ? "_qstats.csv" : "_stats.csv"));
    write_lines(samples_path, records);
    std::string csv = stats_csv(cfg, seed, stats);
    {
        std::ofstream f(stats_path, std::ios::trunc);
        f << csv;
    }

    json summary{{"command", quantum ? "qsample" : "sample"},
                 {"config", cfg.hash},
                 {"seed", seed},
                 {"samples", R},
                 {"aborted", aborted},
                 {"delta_t", sched.delta_t},
                 {"mean_lookback", mean_lookback},
                 {"files", {samples_path.string(), stats_path.string()}}};
    json jstats = json::object();
    for (const auto& [name, st] : stats) jstats[name] = stats_to_json(st);
    summary["stats"] = jstats;
    print_summary(o, summary, csv);
    return aborted ? kExitAbort : kExitOk;
}

// ---------------------------------------------------------------------------
// tau

int run_tau(const CommonOpts& o) {
    RunConfig cfg = load_run_config(o.config_path);
    std::uint64_t seed = o.seed.value_or(cfg.sampler.seed);
    CoupledUpdate u = cfg.build_update();
    TrackedMode mode = cfg.build_tracked_mode(u);
    std::uint64_t N = u.state_count();

    json out{{"command", "tau"}, {"config", cfg.hash}, {"seed", seed}, {"states", N}};
    std::vector<std::string> skipped;

    double tau_spectral = std::numeric_limits<double>::quiet_NaN();
    bool have_spectral = false;
    if (N <= cfg.tau.spectral_cap) {
        RestrictedChain rc = restricted_chain(u, cfg.tau.spectral_cap);
        SpectralResult sp = spectral_gap(rc.P);
        ProbabilityVector pi_power = stationary_distribution(rc.P);
        out["lambda2"] = sp.lambda2;
        out["gap"] = sp.gap;
        out["tau"] = sp.tau;
        out["tau_finite"] = sp.tau_finite;
        out["stationary_vs_gibbs_tv"] = total_variation(pi_power, rc.pi);
        have_spectral = sp.tau_finite;
        tau_spectral = sp.tau;
    } else {
        skipped.push_back("spectral analysis (" + std::to_string(N) +
                          " states exceeds tau.spectral_cap " +
                          std::to_string(cfg.tau.spectral_cap) + ")");
    }

    CftpSchedule sched = resolve_schedule(cfg, u, seed);
    CoalescenceTimeEstimate est = estimate_coalescence_time(
        u, sched, static_cast<std::size_t>(cfg.tau.replications),
        derive_seed(seed, kTauHatTag), mode, o.threads);
    out["tau_hat"] = est.tau_hat;
    out["tau_hat_stderr"] = est.stderr_;
    out["tau_hat_runs"] = est.completed;
    out["tau_hat_aborted"] = est.aborted;
    out["tau_hat_ci_defined"] = est.ci_defined;

    auto observables = build_observables(cfg);
    const auto& [obs_name, obs_fn] = observables.front();
    State x0 = u.is_ising() ? State{0} : first_admissible_state(u.hardcore());
    ObservableStats fw = forward_mcmc(u, x0, cfg.forward.burnin, cfg.forward.steps, obs_fn,
                                      derive_seed(seed, kForwardTag), cfg.forward.lag_max);
    out["observable"] = obs_name;
    out["tau_obs"] = fw.tau_obs;
    out["tau_obs_from_fit"] = fw.tau_obs_from_fit;
    out["tau_obs_reliable"] = fw.tau_obs_reliable;
    out["forward_mean"] = fw.mean;
    out["forward_err"] = fw.err;

    if (have_spectral) {
        double lnN = std::log(static_cast<double>(N));
        out["ordering"] = json{
            {"tau_obs_le_1.2_tau", fw.tau_obs <= 1.2 * tau_spectral},
            {"tau_le_tau_hat_factor", tau_spectral <= est.tau_hat * (1.0 + lnN)},
        };
    }
    if (!skipped.empty()) out["skipped"] = skipped;

    std::filesystem::path dir = prepare_out_dir(cfg, o);
    std::ofstream f(dir / (cfg.output.prefix + "_tau.json"), std::ios::trunc);
    f << out.dump(2) << "\n";

    print_summary(o, out, "");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// qdetect

std::uint64_t deviants_from_majority(const std::vector<State>& image) {
    std::unordered_map<State, std::uint64_t> counts;
    for (State y : image) ++counts[y];
    std::uint64_t best = 0;
    for (const auto& [_, c] : counts) best = std::max(best, c);
    return image.size() - best;
}

int run_qdetect(const CommonOpts& o, const std::string& map_path, double epsilon_flag) {
    std::optional<RunConfig> cfg;
    if (!o.config_path.empty()) cfg = load_run_config(o.config_path);
    if (map_path.empty() && !cfg)
        throw ConfigError("qdetect: provide --map or --config");

    double epsilon = epsilon_flag > 0 ? epsilon_flag
                                      : (cfg ? cfg->quantum.epsilon : 1e-3);
    std::uint64_t seed = o.seed.value_or(cfg ? cfg->sampler.seed : 1);
    QuantumOptions qopt = cfg ? cfg->build_quantum_options() : QuantumOptions{};

    json rec{{"kind", "qdetect"}, {"seed", seed}, {"epsilon", epsilon}};
    if (cfg) rec["config"] = cfg->hash;

    QuantumVerdict v;
    std::uint64_t deviants = 0;
    if (!map_path.empty()) {
        std::ifstream in(map_path);
        if (!in) throw ConfigError("qdetect: cannot open map file " + map_path);
        json jm;
        try {
            in >> jm;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("qdetect: malformed map file: ") + e.what());
        }
        if (!jm.is_array() || jm.empty())
            throw ConfigError("qdetect: map file must be a nonempty JSON array of integers");
        std::vector<State> image;
        image.reserve(jm.size());
        for (const auto& e : jm) {
            if (!e.is_number_unsigned() && !e.is_number_integer())
                throw ConfigError("qdetect: map entries must be integers");
            auto y = e.get<std::int64_t>();
            if (y < 0 || static_cast<std::uint64_t>(y) >= jm.size())
                throw ConfigError("qdetect: map entries must lie in [0, N)");
            image.push_back(static_cast<State>(y));
        }
        deviants = deviants_from_majority(image);
        rec["states"] = image.size();
        rec["lookback"] = 0;
        RngStream rs(seed);
        UniformSequence ms(rs.child(kDetectTag));
        v = quantum_verdict_for_image(std::move(image), ms, epsilon, qopt);
    } else {
        CoupledUpdate u = cfg->build_update();
        StartRemap remap;
        if (!u.is_ising()) {
            remap = admissible_oracle_wrap(u, first_admissible_state(u.hardcore()));
            qopt.remap = &remap;
        }
        std::uint64_t probe_seed = derive_seed(seed, kDetectTag);
        std::int64_t T = cfg->sampler.delta_t > 0
                             ? cfg->sampler.delta_t
                             : estimate_delta_t(u, derive_seed(seed, kProbeTag));
        RngStream rs(probe_seed);
        deviants = deviants_from_majority(evaluate_map(u, rs, T, qopt.remap));
        rec["states"] = u.state_count();
        rec["lookback"] = T;
        v = quantum_pi_subroutine(u, rs, T, epsilon, qopt);
    }

    rec["deviants"] = deviants;  // w.r.t. the majority image value
    rec["found"] = !v.report.coalesced;
    rec["verdict"] = v.report.coalesced ? "coalesced" : "noncoalesced";
    rec["survivors"] = v.report.survivors;
    rec["oracle_calls"] = v.ledger.oracle_calls;
    rec["map_evaluations"] = v.ledger.map_evaluations;
    rec["measurements"] = v.ledger.measurements;

    if (cfg) {
        std::filesystem::path dir = prepare_out_dir(*cfg, o);
        std::ofstream f(dir / (cfg->output.prefix + "_qdetect.jsonl"), std::ios::app);
        f << rec.dump() << "\n";
    }
    std::cout << rec.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

std::string bench_csv(const RunConfig& cfg, std::uint64_t seed,
                      const std::vector<BenchRecord>& records) {
    std::ostringstream csv;
    csv << "n_states,marked,lookback,classical_ops,quantum_oracle_calls,mean_survivors,"
           "config,seed\n";
    for (const auto& r : records)
        csv << r.n_states << "," << r.marked << "," << r.lookback << ","
            << format_double(r.classical_ops) << "," << format_double(r.quantum_oracle_calls)
            << "," << format_double(r.mean_survivors) << "," << cfg.hash << "," << seed
            << "\n";
    return csv.str();
}

int run_bench(const CommonOpts& o) {
    RunConfig cfg = load_run_config(o.config_path);
    std::uint64_t seed = o.seed.value_or(cfg.sampler.seed);
    std::filesystem::path dir = prepare_out_dir(cfg, o);

    json summary{{"command", "bench"},
                 {"config", cfg.hash},
                 {"seed", seed},
                 {"mode", cfg.bench.mode},
                 {"trials", cfg.bench.trials}};
    std::vector<BenchRecord> records;

    if (cfg.bench.mode == "detection") {
        DetectionBenchOptions opt;
        opt.trials = cfg.bench.trials;
        opt.epsilon = cfg.bench.epsilon;
        opt.threads = o.threads;
        records = run_detection_benchmark(cfg.build_bench_grid(), seed, opt);

        const double cband_lo = 0.9, cband_hi = 1.1, qband_lo = 0.4, qband_hi = 0.6;
        const double mult_lo = 0.2, mult_hi = 5.0;
        json groups = json::array();
        for (std::uint64_t m : cfg.bench.m_targets) {
            std::vector<BenchRecord> sub;
            for (const auto& r : records)
                if (r.marked == m) sub.push_back(r);
            BenchSummary s = summarize_detection(sub);
            groups.push_back(json{{"marked", m},
                                  {"classical_slope", s.classical.slope},
                                  {"quantum_slope", s.quantum.slope},
                                  {"quantum_multiplier", s.quantum_multiplier},
                                  {"classical_in_band",
                                   s.classical.slope >= cband_lo && s.classical.slope <= cband_hi},
                                  {"quantum_in_band",
                                   s.quantum.slope >= qband_lo && s.quantum.slope <= qband_hi},
                                  {"multiplier_in_band",
                                   s.quantum_multiplier >= mult_lo && s.quantum_multiplier <= mult_hi}});
        }
        if (cfg.bench.include_half) {
            std::vector<BenchRecord> sub;
            for (const auto& r : records)
                if (r.marked == r.n_states / 2) sub.push_back(r);
            BenchSummary s = summarize_detection(sub);
            groups.push_back(json{{"marked", "half"},
                                  {"classical_slope", s.classical.slope},
                                  {"quantum_slope", s.quantum.slope},
                                  {"quantum_multiplier", s.quantum_multiplier}});
        }
        summary["groups"] = groups;
        summary["bands"] = json{{"classical_slope", {cband_lo, cband_hi}},
                                {"quantum_slope", {qband_lo, qband_hi}},
                                {"quantum_multiplier", {mult_lo, mult_hi}}};
    } else {
        CoupledUpdate u = cfg.build_update();
        EndToEndOptions opt;
        opt.trials = cfg.bench.trials;
        opt.epsilon = cfg.bench.epsilon;
        opt.threads = o.threads;
        opt.mode = cfg.build_tracked_mode(u);
        records.push_back(
            run_end_to_end_benchmark(u, resolve_schedule(cfg, u, seed), seed, opt));
        const BenchRecord& r = records.back();
        summary["classical_ops"] = r.classical_ops;
        summary["quantum_oracle_calls"] = r.quantum_oracle_calls;
        summary["mean_lookback"] = r.lookback;
        summary["mean_survivors"] = r.mean_survivors;
        if (r.quantum_oracle_calls > 0)
            summary["ops_per_oracle_ratio"] = r.classical_ops / r.quantum_oracle_calls;
    }

    std::string csv = bench_csv(cfg, seed, records);
    {
        std::ofstream f(dir / (cfg.output.prefix + "_bench.csv"), std::ios::trunc);
        f << csv;
    }
    {
        std::ofstream f(dir / (cfg.output.prefix + "_bench_summary.json"), std::ios::trunc);
        f << summary.dump(2) << "\n";
    }
    print_summary(o, summary, csv);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

struct CheckRow {
    std::string name;
    std::string status;  // pass | fail | skip
    std::string detail;
};

int run_validate(const CommonOpts& o) {
    RunConfig cfg = load_run_config(o.config_path);
    std::uint64_t seed = o.seed.value_or(cfg.sampler.seed);
    CoupledUpdate u = cfg.build_update();
    std::uint64_t N = u.state_count();
    constexpr std::uint64_t kMatrixCap = 1024;
    constexpr std::uint64_t kSweepCap = 4096;

    std::vector<CheckRow> rows;
    auto pass = [&](const std::string& n, const std::string& d) { rows.push_back({n, "pass", d}); };
    auto failr = [&](const std::string& n, const std::string& d) { rows.push_back({n, "fail", d}); };
    auto skip = [&](const std::string& n, const std::string& d) { rows.push_back({n, "skip", d}); };

    const std::string too_big =
        "state space " + std::to_string(N) + " exceeds cap " + std::to_string(kMatrixCap);

    if (N <= kMatrixCap) {
        // 1. induced matrix is column-stochastic
        TransitionMatrix P = induced_transition_matrix(u, kMatrixCap);
        try {
            P.validate(1e-12);
            pass("transition-matrix-stochastic", "columns sum to 1 within 1e-12");
        } catch (const std::exception& e) {
            failr("transition-matrix-stochastic", e.what());
        }

        // 2/3. detailed balance and stationarity against the closed-form weights
        RestrictedChain rc = restricted_chain(u, kMatrixCap);
        if (check_detailed_balance(rc.P, rc.pi, 1e-9))
            pass("detailed-balance-gibbs", "max flow imbalance <= 1e-9");
        else
            failr("detailed-balance-gibbs", "flow imbalance above 1e-9");
        try {
            double tv = total_variation(stationary_distribution(rc.P), rc.pi);
            if (tv <= 1e-9)
                pass("stationary-matches-gibbs", "TV = " + format_double(tv));
            else
                failr("stationary-matches-gibbs", "TV = " + format_double(tv));
        } catch (const DegenerateChainError& e) {
            failr("stationary-matches-gibbs", e.what());
        }

        // 4. both couplings induce the same single-site law
        if (u.is_ising()) {
            CoupledUpdate uh = u, uf = u;
            uh.coupling = CouplingKind::HeatBath;
            uf.coupling = CouplingKind::Flip;
            if (induced_transition_matrix(uh, kMatrixCap).entries() ==
                induced_transition_matrix(uf, kMatrixCap).entries())
                pass("coupling-marginals-identical", "heat-bath and flip matrices bitwise equal");
            else
                failr("coupling-marginals-identical", "matrices differ");
        } else {
            skip("coupling-marginals-identical", "flip coupling undefined for this model");
        }
    } else {
        skip("transition-matrix-stochastic", too_big);
        skip("detailed-balance-gibbs", too_big);
        skip("stationary-matches-gibbs", too_big);
        skip("coupling-marginals-identical", too_big);
    }

    // 5. monotone couplings preserve the componentwise order
    if (u.monotone()) {
        RngStream rs(derive_seed(seed, kValidateTag));
        UniformSequence us(rs.child(1));
        int n = u.sites();
        State mask = n >= 64 ? ~State{0} : ((State{1} << n) - 1);
        bool ok = true;
        std::string detail = "2000 sampled pairs preserved";
        for (int k = 0; k < 2000 && ok; ++k) {
            auto bits = [&](double frac) {
                State x = 0;
                for (int i = 0; i < n; ++i)
                    if (us.next() < frac) x |= State{1} << i;
                return x;
            };
            State x = bits(0.5) & mask;
            State y = (x | bits(0.5)) & mask;  // superset of x
            int site = std::min<int>(static_cast<int>(us.next() * n), n - 1);
            double alpha = us.next();
            State ux = apply_update(u, x, site, alpha);
            State uy = apply_update(u, y, site, alpha);
            if ((ux & uy) != ux) {
                ok = false;
                detail = "order broken at pair " + std::to_string(x) + " <= " +
                         std::to_string(y) + ", site " + std::to_string(site);
            }
        }
        ok ? pass("monotone-coupling-order", detail) : failr("monotone-coupling-order", detail);
    } else {
        skip("monotone-coupling-order", "coupling not monotone for this configuration");
    }

    // 6. search iterations preserve the state norm
    {
        std::uint64_t nn = std::min<std::uint64_t>(N, 256);
        AmplitudeVector st = uniform_state_of_size(nn);
        std::vector<State> image(nn, 0);
        for (std::uint64_t i = 0; i < nn; i += 3) image[i] = 1;
        DetectionProblem prob{std::move(image), 0};
        QueryLedger led;
        double worst = 0;
        for (int k = 0; k < 25; ++k) {
            oracle_phase_flip(st, prob, led);
            diffusion(st);
            worst = std::max(worst, std::abs(st.norm() - 1.0));
        }
        worst <= 1e-10 ? pass("amplitude-norm-preserved",
                              "max |norm-1| = " + format_double(worst) + " over 25 iterations")
                       : failr("amplitude-norm-preserved", "norm drift " + format_double(worst));
    }

    // 7. the diffusion operator is a reflection (applying it twice = identity)
    {
        std::uint64_t nn = std::min<std::uint64_t>(N, 128);
        AmplitudeVector st = uniform_state_of_size(nn);
        RngStream rs(derive_seed(seed, kValidateTag ^ 7));
        UniformSequence us(rs.child(2));
        for (auto& a : st.amp) a = std::complex<double>(us.next() - 0.5, us.next() - 0.5);
        double norm = st.norm();
        for (auto& a : st.amp) a /= norm;
        AmplitudeVector copy = st;
        diffusion(st);
        diffusion(st);
        double worst = 0;
        for (std::size_t i = 0; i < st.size(); ++i)
            worst = std::max(worst, std::abs(st.amp[i] - copy.amp[i]));
        worst <= 1e-12 ? pass("diffusion-involution", "max deviation " + format_double(worst))
                       : failr("diffusion-involution", "deviation " + format_double(worst));
    }

    // 8. one full sweep maps every encoding into the admissible set
    if (!u.is_ising()) {
        if (N <= kSweepCap) {
            CoupledUpdate sweep_u = u;
            sweep_u.schedule = SiteSchedule::Sweep;
            int n = u.sites();
            bool ok = true;
            std::string detail = "3 sweeps x " + std::to_string(N) + " starts all admissible";
            for (int rep = 0; rep < 3 && ok; ++rep) {
                RngStream rs(derive_seed(seed, kValidateTag ^ (0x100 + rep)));
                for (State x = 0; x < N && ok; ++x) {
                    State y = apply_window(sweep_u, rs, -n, 0, x);
                    if (!is_admissible(u.hardcore(), y)) {
                        ok = false;
                        detail = "start " + std::to_string(x) + " left inadmissible";
                    }
                }
            }
            ok ? pass("hardcore-sweep-admissible", detail)
               : failr("hardcore-sweep-admissible", detail);
        } else {
            skip("hardcore-sweep-admissible",
                 "state space " + std::to_string(N) + " exceeds cap " + std::to_string(kSweepCap));
        }
    } else {
        skip("hardcore-sweep-admissible", "no admissibility constraint in this model");
    }

    // 9. search-based and enumeration verdicts agree on live lookbacks
    if (N <= (std::uint64_t{1} << 16)) {
        StartRemap remap;
        QuantumOptions qopt = cfg.build_quantum_options();
        TrackedMode mode = TrackedMode::Full;
        if (!u.is_ising()) {
            remap = admissible_oracle_wrap(u, first_admissible_state(u.hardcore()));
            qopt.remap = &remap;
            mode = TrackedMode::AdmissibleOnly;
        }
        bool ok = true;
        std::string detail;
        int checks = 0;
        for (int k = 0; k < 25 && ok; ++k) {
            RngStream rs(derive_seed(seed, kValidateTag ^ (0x200 + k)));
            for (std::int64_t T : {std::int64_t{1}, std::int64_t{4}, std::int64_t{16}}) {
                CoalescenceReport cl = pi_subroutine(u, rs, T, mode, N, qopt.remap);
                // 1e-6 miss budget makes a sampling miss essentially impossible
                // over the 75 paired checks below.
                QuantumVerdict qv = quantum_pi_subroutine(u, rs, T, 1e-6, qopt);
                ++checks;
                bool same_verdict = cl.coalesced == qv.report.coalesced;
                bool same_value = !cl.coalesced || (qv.report.value == cl.value);
                if (!same_verdict || !same_value) {
                    ok = false;
                    detail = "disagreement at T = " + std::to_string(T);
                    break;
                }
            }
        }
        if (ok) detail = std::to_string(checks) + " paired verdicts agree";
        ok ? pass("search-verdict-agreement", detail)
           : failr("search-verdict-agreement", detail);
    } else {
        skip("search-verdict-agreement",
             "state space " + std::to_string(N) + " exceeds the simulation budget");
    }

    bool any_fail = false;
    for (const auto& r : rows) any_fail |= r.status == "fail";

    if (o.format == "csv") {
        std::cout << "check,status,detail\n";
        for (const auto& r : rows)
            std::cout << r.name << "," << r.status << ",\"" << r.detail << "\"\n";
    } else {
        json out{{"command", "validate"},
                 {"config", cfg.hash},
                 {"seed", seed},
                 {"ok", !any_fail}};
        json jrows = json::array();
        for (const auto& r : rows)
            jrows.push_back(json{{"check", r.name}, {"status", r.status}, {"detail", r.detail}});
        out["checks"] = jrows;
        std::cout << out.dump(2) << "\n";
    }
    return any_fail ? kExitInvariant : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact Markov-chain sampling via coupling from the past, with a "
                 "search-based coalescence check and cost benchmarks"};
    app.require_subcommand(1);

    CommonOpts sample_o, qsample_o, tau_o, qdetect_o, bench_o, validate_o;
    std::optional<std::uint64_t> sample_replay, qsample_replay;
    std::string qdetect_map;
    double qdetect_epsilon = 0;

    auto* c_sample = app.add_subcommand("sample", "Draw exact samples by classical CFTP");
    add_common(c_sample, sample_o, true);
    c_sample->add_option("--replay", sample_replay,
                         "Re-run one record with this exact stream seed and print it");

    auto* c_qsample =
        app.add_subcommand("qsample", "Draw exact samples with the search-based check");
    add_common(c_qsample, qsample_o, true);
    c_qsample->add_option("--replay", qsample_replay,
                          "Re-run one record with this exact stream seed and print it");

    auto* c_tau = app.add_subcommand("tau", "Report spectral, observable and coalescence "
                                            "time scales with ordering checks");
    add_common(c_tau, tau_o, true);

    auto* c_qdetect = app.add_subcommand(
        "qdetect", "Run the non-coalescence detector on a config or an explicit map file");
    add_common(c_qdetect, qdetect_o, false);
    c_qdetect->add_option("--map", qdetect_map, "JSON array of N integers in [0, N)");
    c_qdetect->add_option("--epsilon", qdetect_epsilon, "Miss budget override");

    auto* c_bench = app.add_subcommand("bench", "Scaling benchmark: classical repeats vs "
                                                "search oracle calls, with slope fits");
    add_common(c_bench, bench_o, true);

    auto* c_validate = app.add_subcommand("validate", "Run the invariant suite");
    add_common(c_validate, validate_o, true);

    try {
        app.parse(argc, argv);
        if (c_sample->parsed()) return run_sampler_command(sample_o, sample_replay, false);
        if (c_qsample->parsed()) return run_sampler_command(qsample_o, qsample_replay, true);
        if (c_tau->parsed()) return run_tau(tau_o);
        if (c_qdetect->parsed()) return run_qdetect(qdetect_o, qdetect_map, qdetect_epsilon);
        if (c_bench->parsed()) return run_bench(bench_o);
        if (c_validate->parsed()) return run_validate(validate_o);
        return kExitValidation;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitValidation : kExitOk;
    } catch (const CapExceededError& e) {
        std::cerr << "abort: " << e.what() << "\n";
        return kExitAbort;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DegenerateChainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "invariant failure: " << e.what() << "\n";
        return kExitInvariant;
    }
}
