#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace cftpq {

/// Thrown when a chain has a second eigenvalue at (or numerically at) 1, so
/// no unique stationary distribution can be extracted.
struct DegenerateChainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Probability distribution over {0, ..., dim-1}; entries nonnegative and
/// summing to one within tolerance.
class ProbabilityVector {
public:
    ProbabilityVector() = default;
    explicit ProbabilityVector(std::vector<double> weights, double tol = 1e-12);

    std::size_t size() const { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    const std::vector<double>& weights() const { return w_; }

    std::string to_json_text() const;
    static ProbabilityVector from_json_text(const std::string& text);

private:
    std::vector<double> w_;
};

/// Total variation distance, (1/2) * l1.
double total_variation(const ProbabilityVector& p, const ProbabilityVector& q);

/// Column-stochastic transition matrix over a finite state set:
/// entry(x, y) = Prob(state x at t+1 | state y at t), so each column sums
/// to one.  Stored row-major; the JSON layout mirrors the storage.
class TransitionMatrix {
public:
    explicit TransitionMatrix(std::size_t dim)
        : dim_(dim), p_(dim * dim, 0.0) {}

    /// Build from a row-major entry list, validating stochasticity.
    static TransitionMatrix from_entries(std::size_t dim, std::vector<double> row_major,
                                         double tol = 1e-12);

    std::size_t dim() const { return dim_; }
    double operator()(std::size_t x, std::size_t y) const { return p_[x * dim_ + y]; }
    double& at(std::size_t x, std::size_t y) { return p_[x * dim_ + y]; }
    const std::vector<double>& entries() const { return p_; }

    /// Nonnegative entries, every column summing to one within tol.
    void validate(double tol = 1e-12) const;

    /// One step of the chain: v' = P v.
    std::vector<double> apply(const std::vector<double>& v) const;

    std::string to_json_text() const;
    static TransitionMatrix from_json_text(const std::string& text);

private:
    std::size_t dim_;
    std::vector<double> p_;
};

/// Spectral summary of a chain: gap = 1 - |lambda_2| and the relaxation time
/// tau = 1/gap (tau_finite is false when the gap is numerically zero).
struct SpectralResult {
    double lambda2 = 0.0;
    double gap = 1.0;
    double tau = 1.0;
    bool tau_finite = true;
};

/// Stationary distribution via power iteration (iteration cap 1e6).  Throws
/// DegenerateChainError when |lambda_2| is within 1e-10 of 1, i.e. when the
/// chain does not relax to a unique fixed point.
ProbabilityVector stationary_distribution(const TransitionMatrix& P, double tol = 1e-12);

/// max_{x,y} |pi(x) P(y,x) - pi(y) P(x,y)| <= tol ?
bool check_detailed_balance(const TransitionMatrix& P, const ProbabilityVector& pi,
                            double tol);

/// Gap and relaxation time from a deflated power iteration on P - pi 1^T.
/// Intended for reversible chains (real spectrum).
SpectralResult spectral_gap(const TransitionMatrix& P);

/// Distribution after `steps` applications of P starting from point mass x0
/// (column x0 of P^steps, computed by repeated matrix-vector products).
ProbabilityVector distribution_after(const TransitionMatrix& P, std::size_t x0,
                                     std::int64_t steps);

/// Descriptor of an encoded configuration set: `bits` binary degrees of
/// freedom, `cardinality` reachable encodings, plus an optional admissibility
/// predicate for models whose physical states are a strict subset.
struct StateSpace {
    int bits = 0;
    std::uint64_t cardinality = 1;
    std::function<bool(std::uint64_t)> admissible;  // null: every encoding is a state

    std::uint64_t admissible_count() const;
    void validate() const;
};

/// The three time scales the samplers compare: tau (spectral relaxation),
/// tau_obs (observable autocorrelation), tau_hat (mean coalescence lookback).
struct TimeScales {
    double tau = std::numeric_limits<double>::quiet_NaN();
    double tau_obs = std::numeric_limits<double>::quiet_NaN();
    double tau_hat = std::numeric_limits<double>::quiet_NaN();
    bool tau_finite = false;
};

}  // namespace cftpq
