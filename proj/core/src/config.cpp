#include "cftpq/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cftpq/util.hpp"

namespace cftpq {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config: " + where + ": " + what);
}

/// Strict-parsing guard: every key present must be in the allowed set.
void check_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
    if (!j.is_object()) fail(where, "expected an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) fail(where, "unknown key \"" + key + "\"");
}

template <typename T>
T get_or(const json& j, const std::string& where, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(where, "key \"" + key + "\" has the wrong type");
    }
}

LatticeConfig parse_lattice(const json& j) {
    check_keys(j, "model.lattice", {"type", "n", "width", "height", "edges"});
    LatticeConfig lc;
    lc.type = get_or<std::string>(j, "model.lattice", "type", lc.type);
    lc.n = get_or<int>(j, "model.lattice", "n", lc.n);
    lc.width = get_or<int>(j, "model.lattice", "width", lc.width);
    lc.height = get_or<int>(j, "model.lattice", "height", lc.height);
    if (j.contains("edges")) {
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) fail("model.lattice.edges", "entries must be pairs");
            lc.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        }
    }
    return lc;
}

ModelConfig parse_model(const json& j) {
    check_keys(j, "model",
               {"type", "lattice", "coupling_J", "field_h", "beta", "fugacity", "coupling",
                "schedule", "flip_bias"});
    ModelConfig mc;
    mc.type = get_or<std::string>(j, "model", "type", mc.type);
    if (mc.type != "ising" && mc.type != "hardcore")
        fail("model.type", "expected \"ising\" or \"hardcore\"");
    if (j.contains("lattice")) mc.lattice = parse_lattice(j.at("lattice"));
    mc.coupling_J = get_or<double>(j, "model", "coupling_J", mc.coupling_J);
    mc.field_h = get_or<double>(j, "model", "field_h", mc.field_h);
    mc.beta = get_or<double>(j, "model", "beta", mc.beta);
    mc.fugacity = get_or<double>(j, "model", "fugacity", mc.fugacity);
    mc.coupling = get_or<std::string>(j, "model", "coupling", mc.coupling);
    if (mc.coupling != "heat-bath" && mc.coupling != "flip")
        fail("model.coupling", "expected \"heat-bath\" or \"flip\"");
    mc.schedule = get_or<std::string>(j, "model", "schedule", mc.schedule);
    if (mc.schedule != "random-site" && mc.schedule != "sweep")
        fail("model.schedule", "expected \"random-site\" or \"sweep\"");
    mc.flip_bias = get_or<double>(j, "model", "flip_bias", mc.flip_bias);
    if (!(mc.flip_bias >= -1.0 && mc.flip_bias <= 1.0))
        fail("model.flip_bias", "must lie in [-1, 1]");
    return mc;
}

SamplerConfig parse_sampler(const json& j) {
    check_keys(j, "sampler", {"schedule_mode", "delta_t", "cap", "tracked_mode", "samples", "seed"});
    SamplerConfig sc;
    sc.schedule_mode = get_or<std::string>(j, "sampler", "schedule_mode", sc.schedule_mode);
    if (sc.schedule_mode != "doubling" && sc.schedule_mode != "additive")
        fail("sampler.schedule_mode", "expected \"doubling\" or \"additive\"");
    sc.delta_t = get_or<std::int64_t>(j, "sampler", "delta_t", sc.delta_t);
    if (sc.delta_t < 0) fail("sampler.delta_t", "must be >= 0 (0 = probe automatically)");
    sc.cap = get_or<std::int64_t>(j, "sampler", "cap", sc.cap);
    if (sc.cap < 1) fail("sampler.cap", "must be >= 1");
    sc.tracked_mode = get_or<std::string>(j, "sampler", "tracked_mode", sc.tracked_mode);
    if (sc.tracked_mode != "auto" && sc.tracked_mode != "full" &&
        sc.tracked_mode != "extremal-pair" && sc.tracked_mode != "admissible-only")
        fail("sampler.tracked_mode",
             "expected \"auto\", \"full\", \"extremal-pair\" or \"admissible-only\"");
    sc.samples = get_or<int>(j, "sampler", "samples", sc.samples);
    if (sc.samples < 1) fail("sampler.samples", "must be >= 1");
    sc.seed = get_or<std::uint64_t>(j, "sampler", "seed", sc.seed);
    return sc;
}

QuantumConfig parse_quantum(const json& j) {
    check_keys(j, "quantum", {"epsilon", "premeasure", "growth", "pass_cap_mult"});
    QuantumConfig qc;
    qc.epsilon = get_or<double>(j, "quantum", "epsilon", qc.epsilon);
    if (!(qc.epsilon > 0.0 && qc.epsilon < 1.0))
        fail("quantum.epsilon", "must lie strictly between 0 and 1");
    qc.premeasure = get_or<int>(j, "quantum", "premeasure", qc.premeasure);
    if (qc.premeasure < 1) fail("quantum.premeasure", "must be >= 1");
    qc.growth = get_or<double>(j, "quantum", "growth", qc.growth);
    if (!(qc.growth > 1.0)) fail("quantum.growth", "must exceed 1");
    qc.pass_cap_mult = get_or<double>(j, "quantum", "pass_cap_mult", qc.pass_cap_mult);
    if (!(qc.pass_cap_mult > 0.0)) fail("quantum.pass_cap_mult", "must be positive");
    return qc;
}

ForwardConfig parse_forward(const json& j) {
    check_keys(j, "forward", {"burnin", "steps", "lag_max"});
    ForwardConfig fc;
    fc.burnin = get_or<std::int64_t>(j, "forward", "burnin", fc.burnin);
    fc.steps = get_or<std::int64_t>(j, "forward", "steps", fc.steps);
    fc.lag_max = get_or<int>(j, "forward", "lag_max", fc.lag_max);
    if (fc.burnin < 0) fail("forward.burnin", "must be >= 0");
    if (fc.steps < 2) fail("forward.steps", "must be >= 2");
    if (fc.lag_max < 1) fail("forward.lag_max", "must be >= 1");
    return fc;
}

TauBlockConfig parse_tau(const json& j) {
    check_keys(j, "tau", {"replications", "spectral_cap"});
    TauBlockConfig tc;
    tc.replications = get_or<int>(j, "tau", "replications", tc.replications);
    if (tc.replications < 2) fail("tau.replications", "must be >= 2");
    tc.spectral_cap = get_or<std::uint64_t>(j, "tau", "spectral_cap", tc.spectral_cap);
    if (tc.spectral_cap < 1) fail("tau.spectral_cap", "must be >= 1");
    return tc;
}

BenchConfig parse_bench(const json& j) {
    check_keys(j, "bench", {"mode", "exponents", "m_targets", "include_half", "trials", "epsilon"});
    BenchConfig bc;
    bc.mode = get_or<std::string>(j, "bench", "mode", bc.mode);
    if (bc.mode != "detection" && bc.mode != "end-to-end")
        fail("bench.mode", "expected \"detection\" or \"end-to-end\"");
    if (j.contains("exponents")) bc.exponents = j.at("exponents").get<std::vector<int>>();
    for (int e : bc.exponents)
        if (e < 1 || e > 22) fail("bench.exponents", "entries must lie in [1, 22]");
    if (j.contains("m_targets"))
        bc.m_targets = j.at("m_targets").get<std::vector<std::uint64_t>>();
    bc.include_half = get_or<bool>(j, "bench", "include_half", bc.include_half);
    bc.trials = get_or<int>(j, "bench", "trials", bc.trials);
    if (bc.trials < 1) fail("bench.trials", "must be >= 1");
    bc.epsilon = get_or<double>(j, "bench", "epsilon", bc.epsilon);
    if (!(bc.epsilon > 0.0 && bc.epsilon < 1.0))
        fail("bench.epsilon", "must lie strictly between 0 and 1");
    return bc;
}

OutputConfig parse_output(const json& j) {
    check_keys(j, "output", {"dir", "prefix"});
    OutputConfig oc;
    oc.dir = get_or<std::string>(j, "output", "dir", oc.dir);
    oc.prefix = get_or<std::string>(j, "output", "prefix", oc.prefix);
    if (oc.prefix.empty()) fail("output.prefix", "must be nonempty");
    return oc;
}

}  // namespace

Lattice LatticeConfig::build() const {
    if (type == "chain") return make_chain(n);
    if (type == "cycle") return make_cycle(n);
    if (type == "square-open") return make_square(width, height, false);
    if (type == "square-periodic") return make_square(width, height, true);
    if (type == "edges") return make_from_edges(n, edges);
    throw ConfigError("config: model.lattice.type: unknown lattice type \"" + type + "\"");
}

CoupledUpdate ModelConfig::build() const {
    CoupledUpdate u;
    if (type == "ising") {
        IsingModel m;
        m.lattice = lattice.build();
        m.coupling_J = coupling_J;
        m.field_h = field_h;
        m.beta = beta;
        u.model = m;
    } else {
        HardCoreModel m;
        m.lattice = lattice.build();
        m.fugacity = fugacity;
        u.model = m;
    }
    u.coupling = coupling == "flip" ? CouplingKind::Flip : CouplingKind::HeatBath;
    u.schedule = schedule == "sweep" ? SiteSchedule::Sweep : SiteSchedule::RandomSite;
    u.flip_bias = flip_bias;
    u.validate();
    return u;
}

CftpSchedule RunConfig::build_schedule() const {
    CftpSchedule s;
    s.mode = sampler.schedule_mode == "additive" ? ScheduleMode::Additive : ScheduleMode::Doubling;
    s.delta_t = sampler.delta_t > 0 ? sampler.delta_t : 1;  // callers probe when delta_t == 0
    s.cap = sampler.cap;
    s.validate();
    return s;
}

TrackedMode RunConfig::build_tracked_mode(const CoupledUpdate& u) const {
    const std::string& m = sampler.tracked_mode;
    if (m == "full") return TrackedMode::Full;
    if (m == "extremal-pair") return TrackedMode::ExtremalPair;
    if (m == "admissible-only") return TrackedMode::AdmissibleOnly;
    if (u.monotone()) return TrackedMode::ExtremalPair;
    return u.is_ising() ? TrackedMode::Full : TrackedMode::AdmissibleOnly;
}

QuantumOptions RunConfig::build_quantum_options() const {
    QuantumOptions opt;
    opt.premeasure = quantum.premeasure;
    opt.detection.growth = quantum.growth;
    opt.detection.pass_cap_mult = quantum.pass_cap_mult;
    return opt;
}

std::vector<BenchPoint> RunConfig::build_bench_grid() const {
    std::vector<BenchPoint> grid;
    for (int e : bench.exponents) {
        std::uint64_t N = std::uint64_t{1} << e;
        for (std::uint64_t m : bench.m_targets) {
            if (m < 1 || m > N)
                throw ConfigError("config: bench.m_targets: M must satisfy 1 <= M <= N");
            grid.push_back({N, m});
        }
        if (bench.include_half) grid.push_back({N, N / 2});
    }
    return grid;
}

Observable RunConfig::build_observable(const std::string& name) const {
    CoupledUpdate u = model.build();
    int n = u.sites();
    if (name == "magnetization") {
        if (!u.is_ising()) throw ConfigError("config: observables: magnetization needs an ising model");
        return [n](State x) { return magnetization(x, n); };
    }
    if (name == "energy") {
        if (!u.is_ising()) throw ConfigError("config: observables: energy needs an ising model");
        IsingModel m = u.ising();
        return [m](State x) { return energy(m, x); };
    }
    if (name == "occupation") {
        if (u.is_ising()) throw ConfigError("config: observables: occupation needs a hardcore model");
        return [](State x) { return static_cast<double>(occupation(x)); };
    }
    throw ConfigError("config: observables: unknown observable \"" + name + "\"");
}

std::string config_hash_of(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return to_hex16(fnv1a64(j.dump()));  // object keys serialize sorted
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, "top level",
               {"model", "sampler", "quantum", "observables", "forward", "tau", "bench", "output"});
    if (!j.contains("model")) fail("top level", "missing required \"model\" block");

    RunConfig rc;
    rc.model = parse_model(j.at("model"));
    if (j.contains("sampler")) rc.sampler = parse_sampler(j.at("sampler"));
    if (j.contains("quantum")) rc.quantum = parse_quantum(j.at("quantum"));
    if (j.contains("forward")) rc.forward = parse_forward(j.at("forward"));
    if (j.contains("tau")) rc.tau = parse_tau(j.at("tau"));
    if (j.contains("bench")) rc.bench = parse_bench(j.at("bench"));
    if (j.contains("output")) rc.output = parse_output(j.at("output"));
    if (j.contains("observables")) {
        try {
            rc.observables = j.at("observables").get<std::vector<std::string>>();
        } catch (const json::exception&) {
            fail("observables", "expected an array of strings");
        }
    } else {
        rc.observables = {rc.model.type == "ising" ? "magnetization" : "occupation"};
    }
    try {
        rc.model.build();  // surface lattice/model validation errors as config errors
        for (const auto& name : rc.observables) rc.build_observable(name);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail("model", e.what());
    }
    rc.hash = to_hex16(fnv1a64(j.dump()));
    return rc;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

}  // namespace cftpq
