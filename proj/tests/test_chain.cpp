#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cftpq/chain.hpp"
#include "cftpq/rng.hpp"

using namespace cftpq;

namespace {

// Column-stochastic 2-state chain: P(1<-0) = p, P(0<-1) = q.
TransitionMatrix two_state(double p, double q) {
    TransitionMatrix P(2);
    P.at(0, 0) = 1 - p;
    P.at(1, 0) = p;
    P.at(0, 1) = q;
    P.at(1, 1) = 1 - q;
    P.validate(1e-12);
    return P;
}

// Rank-1 chain: every column equals the target distribution.
TransitionMatrix rank_one(const std::vector<double>& pi) {
    TransitionMatrix P(pi.size());
    for (std::size_t x = 0; x < pi.size(); ++x)
        for (std::size_t y = 0; y < pi.size(); ++y) P.at(x, y) = pi[x];
    return P;
}

}  // namespace

TEST_SUITE("probability vectors") {
    TEST_CASE("must be nonnegative and sum to one") {
        CHECK_NOTHROW(ProbabilityVector({0.25, 0.75}));
        CHECK_THROWS_AS(ProbabilityVector({0.5, 0.6}), std::invalid_argument);
        CHECK_THROWS_AS(ProbabilityVector({1.2, -0.2}), std::invalid_argument);
        CHECK_THROWS_AS(ProbabilityVector(std::vector<double>{}), std::invalid_argument);
    }

    TEST_CASE("total variation basics") {
        ProbabilityVector p({0.5, 0.5}), q({0.1, 0.9});
        CHECK(total_variation(p, p) == 0.0);
        CHECK(total_variation(p, q) == doctest::Approx(0.4).epsilon(1e-12));
        ProbabilityVector r({1.0, 0.0}), s({0.0, 1.0});
        CHECK(total_variation(r, s) == doctest::Approx(1.0));
        CHECK_THROWS_AS(total_variation(p, ProbabilityVector({1.0})), std::invalid_argument);
    }

    TEST_CASE("json round trip") {
        ProbabilityVector p({0.3, 0.2, 0.5});
        ProbabilityVector q = ProbabilityVector::from_json_text(p.to_json_text());
        REQUIRE(q.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) CHECK(q[i] == p[i]);
    }
}

TEST_SUITE("transition matrices") {
    TEST_CASE("column sums are enforced at 1e-12") {
        std::vector<double> bad{0.5, 0.5, 0.500001, 0.499999};  // row-major 2x2
        CHECK_THROWS_AS(TransitionMatrix::from_entries(2, bad), std::invalid_argument);
        CHECK_NOTHROW(two_state(0.2, 0.1));
    }

    TEST_CASE("negative entries are rejected") {
        std::vector<double> bad{1.1, 0.0, -0.1, 1.0};
        CHECK_THROWS_AS(TransitionMatrix::from_entries(2, bad), std::invalid_argument);
    }

    TEST_CASE("json round trip preserves entries bitwise") {
        TransitionMatrix P = two_state(0.2, 0.1);
        TransitionMatrix Q = TransitionMatrix::from_json_text(P.to_json_text());
        CHECK(Q.dim() == 2);
        CHECK(Q.entries() == P.entries());
    }
}

TEST_SUITE("stationary distribution") {
    TEST_CASE("two-state chain p=0.2 q=0.1 has pi = (1/3, 2/3)") {
        ProbabilityVector pi = stationary_distribution(two_state(0.2, 0.1));
        CHECK(pi[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
        CHECK(pi[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
    }

    TEST_CASE("doubly stochastic matrices have uniform pi") {
        ProbabilityVector pi = stationary_distribution(two_state(0.3, 0.3));
        CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-10));
    }

    TEST_CASE("output is a fixed point of P") {
        TransitionMatrix P = two_state(0.37, 0.11);
        ProbabilityVector pi = stationary_distribution(P);
        std::vector<double> Ppi = P.apply(pi.weights());
        double l1 = 0;
        for (std::size_t i = 0; i < 2; ++i) l1 += std::abs(Ppi[i] - pi[i]);
        CHECK(l1 < 1e-10);
    }

    TEST_CASE("identity chain is degenerate") {
        TransitionMatrix I(2);
        I.at(0, 0) = 1.0;
        I.at(1, 1) = 1.0;
        CHECK_THROWS_AS(stationary_distribution(I), DegenerateChainError);
    }

    TEST_CASE("period-2 chain is degenerate (lambda2 = -1)") {
        TransitionMatrix F(2);
        F.at(1, 0) = 1.0;
        F.at(0, 1) = 1.0;
        CHECK_THROWS_AS(stationary_distribution(F), DegenerateChainError);
    }
}

TEST_SUITE("detailed balance") {
    TEST_CASE("two-state chain with its own pi") {
        CHECK(check_detailed_balance(two_state(0.2, 0.1),
                                     ProbabilityVector({1.0 / 3.0, 2.0 / 3.0}), 1e-12));
    }

    TEST_CASE("symmetric matrix with uniform pi") {
        CHECK(check_detailed_balance(two_state(0.3, 0.3), ProbabilityVector({0.5, 0.5}),
                                     1e-12));
    }

    TEST_CASE("deterministic 3-cycle with uniform pi is not reversible") {
        TransitionMatrix C(3);
        C.at(1, 0) = 1.0;
        C.at(2, 1) = 1.0;
        C.at(0, 2) = 1.0;
        double third = 1.0 / 3.0;
        CHECK_FALSE(check_detailed_balance(C, ProbabilityVector({third, third, third}), 1e-12));
    }

    TEST_CASE("dimension mismatch is an error") {
        CHECK_THROWS_AS(check_detailed_balance(two_state(0.2, 0.1),
                                               ProbabilityVector({1.0}), 1e-12),
                        std::invalid_argument);
    }
}

TEST_SUITE("spectral gap") {
    TEST_CASE("two-state chain: lambda2 = 1-p-q = 0.7, tau = 10/3") {
        SpectralResult r = spectral_gap(two_state(0.2, 0.1));
        CHECK(r.lambda2 == doctest::Approx(0.7).epsilon(1e-9));
        CHECK(r.gap == doctest::Approx(0.3).epsilon(1e-9));
        CHECK(r.tau == doctest::Approx(10.0 / 3.0).epsilon(1e-9));
        CHECK(r.tau_finite);
    }

    TEST_CASE("rank-1 chain: lambda2 = 0, tau = 1") {
        SpectralResult r = spectral_gap(rank_one({0.25, 0.25, 0.5}));
        CHECK(std::abs(r.lambda2) < 1e-9);
        CHECK(r.tau == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(r.tau_finite);
    }

    TEST_CASE("identity chain: gap 0, infinite tau flagged instead of thrown") {
        TransitionMatrix I(3);
        for (std::size_t i = 0; i < 3; ++i) I.at(i, i) = 1.0;
        SpectralResult r = spectral_gap(I);
        CHECK_FALSE(r.tau_finite);
        CHECK(r.gap < 1e-9);
    }
}

TEST_SUITE("distribution_after") {
    TEST_CASE("zero steps is a point mass") {
        ProbabilityVector d = distribution_after(two_state(0.2, 0.1), 1, 0);
        CHECK(d[0] == 0.0);
        CHECK(d[1] == 1.0);
    }

    TEST_CASE("rank-1 chain reaches pi in one step") {
        ProbabilityVector d = distribution_after(rank_one({0.25, 0.25, 0.5}), 2, 1);
        CHECK(d[0] == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(d[2] == doctest::Approx(0.5).epsilon(1e-12));
    }

    TEST_CASE("symmetric two-state chain, one step from 0 -> (0.5, 0.5)") {
        ProbabilityVector d = distribution_after(two_state(0.5, 0.5), 0, 1);
        CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(d[1] == doctest::Approx(0.5).epsilon(1e-12));
    }

    TEST_CASE("negative step count is rejected") {
        CHECK_THROWS_AS(distribution_after(two_state(0.5, 0.5), 0, -1),
                        std::invalid_argument);
    }

    TEST_CASE("TV distance to pi is non-increasing in T for reversible chains") {
        for (auto P : {two_state(0.2, 0.1), two_state(0.45, 0.3), two_state(0.5, 0.5)}) {
            ProbabilityVector pi = stationary_distribution(P);
            for (std::size_t x0 = 0; x0 < 2; ++x0) {
                double prev = 2.0;
                for (std::int64_t T : {0, 1, 2, 3, 5, 8, 13, 21, 50}) {
                    double tv = total_variation(distribution_after(P, x0, T), pi);
                    CHECK(tv <= prev + 1e-12);
                    prev = tv;
                }
            }
        }
    }

    TEST_CASE("matrix powers agree with 1e5 forward simulations within TV 0.02") {
        TransitionMatrix P = two_state(0.2, 0.1);
        const std::int64_t T = 5;
        ProbabilityVector exact = distribution_after(P, 0, T);

        RngStream rng(424242);
        UniformSequence u(rng);
        std::vector<int> counts(2, 0);
        const int R = 100000;
        for (int r = 0; r < R; ++r) {
            std::size_t x = 0;
            for (std::int64_t t = 0; t < T; ++t) {
                double a = u.next(), acc = 0.0;
                for (std::size_t y = 0; y < 2; ++y) {
                    acc += P(y, x);
                    if (a < acc) {
                        x = y;
                        break;
                    }
                }
            }
            ++counts[x];
        }
        ProbabilityVector hist({static_cast<double>(counts[0]) / R,
                                static_cast<double>(counts[1]) / R});
        CHECK(total_variation(hist, exact) < 0.02);
    }
}

TEST_SUITE("state space") {
    TEST_CASE("admissible_count counts the predicate or the full cube") {
        StateSpace all{4, 16, nullptr};
        CHECK(all.admissible_count() == 16);
        StateSpace evens{4, 16, [](std::uint64_t x) { return x % 2 == 0; }};
        CHECK(evens.admissible_count() == 8);
    }
}
