#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cftpq/cftp.hpp"
#include "cftpq/costs.hpp"
#include "cftpq/grover.hpp"
#include "cftpq/models.hpp"

namespace cftpq {

/// Configuration rejection: unknown keys, wrong types, out-of-range values.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct LatticeConfig {
    std::string type = "chain";  // chain | cycle | square-open | square-periodic | edges
    int n = 1;
    int width = 0;
    int height = 0;
    std::vector<std::pair<int, int>> edges;

    Lattice build() const;
};

struct ModelConfig {
    std::string type = "ising";  // ising | hardcore
    LatticeConfig lattice;
    double coupling_J = 1.0;
    double field_h = 0.0;
    double beta = 1.0;
    double fugacity = 1.0;
    std::string coupling = "heat-bath";  // heat-bath | flip
    std::string schedule = "sweep";  // sweep | random-site
    double flip_bias = 0.0;  // deliberate update-rule distortion, for invariant testing

    CoupledUpdate build() const;
};

struct SamplerConfig {
    std::string schedule_mode = "doubling";  // doubling | additive
    std::int64_t delta_t = 0;                // 0 = probe a warm-start value
    std::int64_t cap = std::int64_t{1} << 20;
    std::string tracked_mode = "auto";  // auto | full | extremal-pair | admissible-only
    int samples = 1000;
    std::uint64_t seed = 1;
};

struct QuantumConfig {
    double epsilon = 1e-3;
    int premeasure = 8;
    double growth = 1.2;
    double pass_cap_mult = 9.0;
};

struct ForwardConfig {
    std::int64_t burnin = 1000;
    std::int64_t steps = 100000;
    int lag_max = 100;
};

struct TauBlockConfig {
    int replications = 10000;
    std::uint64_t spectral_cap = 4096;  // refuse exact spectral work above this
};

struct BenchConfig {
    std::string mode = "detection";  // detection | end-to-end
    std::vector<int> exponents = {6, 8, 10, 12, 14};
    std::vector<std::uint64_t> m_targets = {1};
    bool include_half = false;  // also run M = N/2 at every size
    int trials = 200;
    double epsilon = 1e-3;
};

struct OutputConfig {
    std::string dir = "out";
    std::string prefix = "run";
};

/// A fully validated run description. `hash` digests the canonical
/// serialization of the parsed document (sorted keys, no whitespace), so
/// formatting differences don't change identity but any value change does.
struct RunConfig {
    ModelConfig model;
    SamplerConfig sampler;
    QuantumConfig quantum;
    std::vector<std::string> observables;  // defaulted from the model type if absent
    ForwardConfig forward;
    TauBlockConfig tau;
    BenchConfig bench;
    OutputConfig output;
    std::string hash;  // 16 lowercase hex chars

    CoupledUpdate build_update() const { return model.build(); }
    CftpSchedule build_schedule() const;
    TrackedMode build_tracked_mode(const CoupledUpdate& u) const;
    QuantumOptions build_quantum_options() const;  // caller wires remap separately
    std::vector<BenchPoint> build_bench_grid() const;

    /// Observable by name; validates the name against the model type.
    Observable build_observable(const std::string& name) const;
};

/// Parse and validate a JSON document; throws ConfigError on unknown keys,
/// type mismatches, or out-of-range values at any nesting level.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// 16-hex-char digest of a canonically re-serialized JSON document.
std::string config_hash_of(const std::string& json_text);

}  // namespace cftpq
