#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "cftpq/config.hpp"
#include "cftpq/models.hpp"

using namespace cftpq;

namespace {

const char* kMinimalIsing = R"({"model": {"type": "ising"}})";
const char* kMinimalGas =
    R"({"model": {"type": "hardcore", "lattice": {"type": "cycle", "n": 4}}})";

}  // namespace

TEST_SUITE("parsing and defaults") {
    TEST_CASE("a minimal document fills every block with defaults") {
        RunConfig rc = parse_run_config(kMinimalIsing);
        CHECK(rc.model.type == "ising");
        CHECK(rc.model.coupling == "heat-bath");
        CHECK(rc.model.schedule == "sweep");
        CHECK(rc.model.beta == 1.0);
        CHECK(rc.sampler.schedule_mode == "doubling");
        CHECK(rc.sampler.delta_t == 0);  // 0 = probe at run time
        CHECK(rc.sampler.samples == 1000);
        CHECK(rc.sampler.tracked_mode == "auto");
        CHECK(rc.quantum.epsilon == 1e-3);
        CHECK(rc.quantum.premeasure == 8);
        CHECK(rc.quantum.growth == 1.2);
        CHECK(rc.quantum.pass_cap_mult == 9.0);
        CHECK(rc.forward.steps == 100000);
        CHECK(rc.tau.replications == 10000);
        CHECK(rc.bench.mode == "detection");
        CHECK(rc.bench.exponents == std::vector<int>{6, 8, 10, 12, 14});
        CHECK(rc.output.prefix == "run");
        CHECK(rc.build_update().schedule == SiteSchedule::Sweep);
    }

    TEST_CASE("observables default from the model type") {
        CHECK(parse_run_config(kMinimalIsing).observables ==
              std::vector<std::string>{"magnetization"});
        CHECK(parse_run_config(kMinimalGas).observables ==
              std::vector<std::string>{"occupation"});
    }

    TEST_CASE("malformed or structurally wrong documents are rejected") {
        CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);
        CHECK_THROWS_AS(parse_run_config("[1, 2]"), ConfigError);
        CHECK_THROWS_AS(parse_run_config("{}"), ConfigError);  // model block is required
        CHECK_THROWS_AS(parse_run_config(R"({"model": {"type": "ising"}, "extra": 1})"),
                        ConfigError);
    }

    TEST_CASE("unknown keys are rejected at every nesting level") {
        auto rejects = [](const std::string& doc) {
            CHECK_THROWS_AS(parse_run_config(doc), ConfigError);
        };
        rejects(R"({"model": {"type": "ising", "temperture": 2.0}})");
        rejects(R"({"model": {"type": "ising", "lattice": {"type": "chain", "sites": 3}}})");
        rejects(R"({"model": {"type": "ising"}, "sampler": {"smaples": 10}})");
        rejects(R"({"model": {"type": "ising"}, "quantum": {"eps": 0.1}})");
        rejects(R"({"model": {"type": "ising"}, "forward": {"burn": 10}})");
        rejects(R"({"model": {"type": "ising"}, "tau": {"reps": 10}})");
        rejects(R"({"model": {"type": "ising"}, "bench": {"grid": [1]}})");
        rejects(R"({"model": {"type": "ising"}, "output": {"file": "x"}})");
    }

    TEST_CASE("wrong-typed values name the offending key") {
        try {
            parse_run_config(R"({"model": {"type": "ising"}, "sampler": {"samples": "many"}})");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("samples") != std::string::npos);
        }
    }

    TEST_CASE("enumerated fields reject unknown alternatives") {
        auto rejects = [](const std::string& doc) {
            CHECK_THROWS_AS(parse_run_config(doc), ConfigError);
        };
        rejects(R"({"model": {"type": "spin-glass"}})");
        rejects(R"({"model": {"type": "ising", "coupling": "swap"}})");
        rejects(R"({"model": {"type": "ising", "schedule": "zigzag"}})");
        rejects(R"({"model": {"type": "ising", "lattice": {"type": "square"}}})");
        rejects(R"({"model": {"type": "ising"}, "sampler": {"schedule_mode": "tripling"}})");
        rejects(R"({"model": {"type": "ising"}, "sampler": {"tracked_mode": "some"}})");
        rejects(R"({"model": {"type": "ising"}, "bench": {"mode": "sideways"}})");
    }
}

TEST_SUITE("value validation") {
    TEST_CASE("range checks across the blocks") {
        auto rejects = [](const std::string& doc) {
            CHECK_THROWS_AS(parse_run_config(doc), ConfigError);
        };
        rejects(R"({"model": {"type": "ising"}, "quantum": {"epsilon": 0.0}})");
        rejects(R"({"model": {"type": "ising"}, "quantum": {"epsilon": 1.0}})");
        rejects(R"({"model": {"type": "ising"}, "quantum": {"premeasure": 0}})");
        rejects(R"({"model": {"type": "ising"}, "quantum": {"growth": 1.0}})");
        rejects(R"({"model": {"type": "ising"}, "quantum": {"pass_cap_mult": 0.0}})");
        rejects(R"({"model": {"type": "ising"}, "sampler": {"samples": 0}})");
        rejects(R"({"model": {"type": "ising"}, "sampler": {"delta_t": -1}})");
        rejects(R"({"model": {"type": "ising"}, "sampler": {"cap": 0}})");
        rejects(R"({"model": {"type": "ising"}, "forward": {"steps": 1}})");
        rejects(R"({"model": {"type": "ising"}, "forward": {"burnin": -1}})");
        rejects(R"({"model": {"type": "ising"}, "forward": {"lag_max": 0}})");
        rejects(R"({"model": {"type": "ising"}, "tau": {"replications": 1}})");
        rejects(R"({"model": {"type": "ising"}, "bench": {"trials": 0}})");
        rejects(R"({"model": {"type": "ising"}, "bench": {"exponents": [0]}})");
        rejects(R"({"model": {"type": "ising"}, "bench": {"exponents": [23]}})");
        rejects(R"({"model": {"type": "ising"}, "bench": {"epsilon": 1.0}})");
        rejects(R"({"model": {"type": "ising"}, "output": {"prefix": ""}})");
    }

    TEST_CASE("model parameter sanity surfaces as configuration errors") {
        auto rejects = [](const std::string& doc) {
            CHECK_THROWS_AS(parse_run_config(doc), ConfigError);
        };
        rejects(R"({"model": {"type": "ising", "beta": -0.5}})");
        rejects(R"({"model": {"type": "hardcore", "fugacity": 0.0}})");
        rejects(R"({"model": {"type": "ising", "flip_bias": 1.5}})");
        rejects(R"({"model": {"type": "ising", "flip_bias": -1.5}})");
    }

    TEST_CASE("lattice construction failures surface as configuration errors") {
        auto rejects = [](const std::string& doc) {
            CHECK_THROWS_AS(parse_run_config(doc), ConfigError);
        };
        rejects(R"({"model": {"type": "ising",
                    "lattice": {"type": "square-periodic", "width": 2, "height": 2}}})");
        rejects(R"({"model": {"type": "ising", "lattice": {"type": "cycle", "n": 2}}})");
        rejects(R"({"model": {"type": "ising",
                    "lattice": {"type": "edges", "n": 3, "edges": [[0, 0]]}}})");
        rejects(R"({"model": {"type": "ising",
                    "lattice": {"type": "edges", "n": 3, "edges": [[0, 1], [1, 0]]}}})");
        rejects(R"({"model": {"type": "ising",
                    "lattice": {"type": "edges", "n": 3, "edges": [[0]]}}})");
    }

    TEST_CASE("observables must match the model family") {
        CHECK_THROWS_AS(
            parse_run_config(R"({"model": {"type": "ising"}, "observables": ["occupation"]})"),
            ConfigError);
        CHECK_THROWS_AS(parse_run_config(
                            R"({"model": {"type": "hardcore",
                                "lattice": {"type": "cycle", "n": 4}},
                                "observables": ["energy"]})"),
                        ConfigError);
        CHECK_THROWS_AS(
            parse_run_config(R"({"model": {"type": "ising"}, "observables": ["charm"]})"),
            ConfigError);
        CHECK_THROWS_AS(parse_run_config(R"({"model": {"type": "ising"}, "observables": [3]})"),
                        ConfigError);
        CHECK_NOTHROW(parse_run_config(
            R"({"model": {"type": "ising"}, "observables": ["magnetization", "energy"]})"));
    }
}

TEST_SUITE("document identity") {
    TEST_CASE("hash is sixteen lowercase hex characters") {
        RunConfig rc = parse_run_config(kMinimalIsing);
        REQUIRE(rc.hash.size() == 16);
        for (char ch : rc.hash) CHECK((std::isdigit(ch) || (ch >= 'a' && ch <= 'f')));
        CHECK(rc.hash == config_hash_of(kMinimalIsing));
    }

    TEST_CASE("key order and whitespace do not change identity; values do") {
        std::string a = R"({"model": {"type": "ising", "beta": 0.5, "field_h": 0.1}})";
        std::string b = R"({  "model" : { "field_h": 0.1, "beta": 0.5, "type": "ising" }  })";
        std::string c = R"({"model": {"type": "ising", "beta": 0.6, "field_h": 0.1}})";
        CHECK(config_hash_of(a) == config_hash_of(b));
        CHECK(config_hash_of(a) != config_hash_of(c));
        CHECK(parse_run_config(a).hash == parse_run_config(b).hash);
        CHECK_THROWS_AS(config_hash_of("{"), ConfigError);
    }
}

TEST_SUITE("derived run objects") {
    TEST_CASE("schedule construction maps mode and the probe sentinel") {
        RunConfig rc = parse_run_config(
            R"({"model": {"type": "ising"},
                "sampler": {"schedule_mode": "additive", "delta_t": 7, "cap": 100}})");
        CftpSchedule s = rc.build_schedule();
        CHECK(s.mode == ScheduleMode::Additive);
        CHECK(s.delta_t == 7);
        CHECK(s.cap == 100);

        RunConfig probe = parse_run_config(kMinimalIsing);
        CHECK(probe.build_schedule().delta_t == 1);  // placeholder until the caller probes
        CHECK(probe.build_schedule().mode == ScheduleMode::Doubling);
    }

    TEST_CASE("auto tracking picks the cheapest sound mode per model") {
        RunConfig ferro = parse_run_config(
            R"({"model": {"type": "ising", "lattice": {"type": "chain", "n": 3}}})");
        CHECK(ferro.build_tracked_mode(ferro.build_update()) == TrackedMode::ExtremalPair);

        RunConfig flip = parse_run_config(
            R"({"model": {"type": "ising", "coupling": "flip",
                "lattice": {"type": "chain", "n": 3}}})");
        CHECK(flip.build_tracked_mode(flip.build_update()) == TrackedMode::Full);

        RunConfig gas = parse_run_config(kMinimalGas);
        CHECK(gas.build_tracked_mode(gas.build_update()) == TrackedMode::AdmissibleOnly);

        RunConfig forced = parse_run_config(
            R"({"model": {"type": "ising", "lattice": {"type": "chain", "n": 3}},
                "sampler": {"tracked_mode": "full"}})");
        CHECK(forced.build_tracked_mode(forced.build_update()) == TrackedMode::Full);
    }

    TEST_CASE("bench grid expands exponents, targets, and the half point") {
        RunConfig rc = parse_run_config(
            R"({"model": {"type": "ising"},
                "bench": {"exponents": [3], "m_targets": [1, 2], "include_half": true}})");
        std::vector<BenchPoint> grid = rc.build_bench_grid();
        REQUIRE(grid.size() == 3);
        CHECK(grid[0].n_states == 8);
        CHECK(grid[0].marked == 1);
        CHECK(grid[1].marked == 2);
        CHECK(grid[2].marked == 4);

        RunConfig bad = parse_run_config(
            R"({"model": {"type": "ising"},
                "bench": {"exponents": [3], "m_targets": [16]}})");
        CHECK_THROWS_AS(bad.build_bench_grid(), ConfigError);
    }

    TEST_CASE("search options carry the tuning knobs") {
        RunConfig rc = parse_run_config(
            R"({"model": {"type": "ising"},
                "quantum": {"premeasure": 3, "growth": 1.5, "pass_cap_mult": 4.0}})");
        QuantumOptions opt = rc.build_quantum_options();
        CHECK(opt.premeasure == 3);
        CHECK(opt.detection.growth == 1.5);
        CHECK(opt.detection.pass_cap_mult == 4.0);
    }

    TEST_CASE("named observables evaluate correctly") {
        RunConfig rc = parse_run_config(
            R"({"model": {"type": "ising", "lattice": {"type": "chain", "n": 2},
                "coupling_J": 1.0, "field_h": 0.0}})");
        Observable mag = rc.build_observable("magnetization");
        CHECK(mag(0b11) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(mag(0b01) == doctest::Approx(0.0).epsilon(1e-15));
        Observable en = rc.build_observable("energy");
        CHECK(en(0b11) == doctest::Approx(-1.0).epsilon(1e-15));
        CHECK(en(0b01) == doctest::Approx(1.0).epsilon(1e-15));

        RunConfig gas = parse_run_config(kMinimalGas);
        Observable occ = gas.build_observable("occupation");
        CHECK(occ(0b0101) == doctest::Approx(2.0).epsilon(1e-15));
    }
}

TEST_SUITE("file loading") {
    TEST_CASE("missing files are a configuration error") {
        CHECK_THROWS_AS(load_run_config("/nonexistent/nowhere.json"), ConfigError);
    }

    TEST_CASE("every shipped configuration parses") {
        const char* dir = std::getenv("CFTPQ_CONFIG_DIR");
        if (!dir) return;  // exercised under ctest, where the path is wired in
        int seen = 0;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.path().extension() != ".json") continue;
            RunConfig rc = load_run_config(entry.path().string());
            CHECK(rc.hash.size() == 16);
            CHECK_NOTHROW(rc.build_update());
            ++seen;
        }
        CHECK(seen >= 5);
    }
}
