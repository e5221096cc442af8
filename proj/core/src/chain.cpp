#include "cftpq/chain.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>

#include "json.hpp"

namespace cftpq {

namespace {

constexpr std::size_t kPowerIterationCap = 1000000;
constexpr double kDegenerateThreshold = 1e-10;

double l1_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

// Power iteration for the fixed point of a column-stochastic matrix; the l1
// norm of a nonnegative start is preserved, so iterates stay distributions.
// Returns false when the iteration cap is hit without meeting tol.
bool power_fixed_point(const TransitionMatrix& P, double tol, std::vector<double>& out) {
    std::size_t n = P.dim();
    std::vector<double> v(n, 1.0 / static_cast<double>(n));
    for (std::size_t it = 0; it < kPowerIterationCap; ++it) {
        std::vector<double> w = P.apply(v);
        double delta = l1_diff(w, v);
        v = std::move(w);
        if (delta <= tol) {
            out = std::move(v);
            return true;
        }
    }
    out = std::move(v);
    return false;
}

// |lambda_2| from power iteration on the deflated operator B = P - pi 1^T.
// B kills the Perron mode (B pi = 0, and B maps everything into the sum-zero
// subspace where it acts as P), so the dominant growth rate of ||B^k w|| is
// |lambda_2|.  Two applications per estimate keep the ratio well-defined when
// the subdominant spectrum contains a +/- pair of equal modulus.
double estimate_lambda2(const TransitionMatrix& P, const std::vector<double>& pi) {
    std::size_t n = P.dim();
    if (n < 2) return 0.0;

    std::vector<double> w(n);
    std::uint64_t s = 0x2545f4914f6cdd1dULL;
    for (auto& x : w) {
        s ^= s >> 12;
        s ^= s << 25;
        s ^= s >> 27;
        x = static_cast<double>((s * 0x2545f4914f6cdd1dULL) >> 11) * 0x1.0p-53 - 0.5;
    }

    auto deflate = [&](std::vector<double>& v) {
        double sum = std::accumulate(v.begin(), v.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) v[i] -= pi[i] * sum;
    };
    auto norm2 = [](const std::vector<double>& v) {
        double s2 = 0;
        for (double x : v) s2 += x * x;
        return std::sqrt(s2);
    };

    deflate(w);
    double nw = norm2(w);
    if (nw == 0.0) return 0.0;
    for (auto& x : w) x /= nw;

    double prev = -1.0;
    int stable = 0;
    double est = 0.0;
    for (std::size_t it = 0; it < kPowerIterationCap; ++it) {
        std::vector<double> w1 = P.apply(w);
        deflate(w1);
        std::vector<double> w2 = P.apply(w1);
        deflate(w2);
        double n2 = norm2(w2);
        if (n2 < 1e-280) return 0.0;  // subdominant spectrum is (numerically) nilpotent
        est = std::sqrt(n2);          // ||w|| == 1, so ||B^2 w||^(1/2) -> |lambda_2|
        for (auto& x : w2) x /= n2;
        w = std::move(w2);
        if (std::abs(est - prev) <= 1e-13 * std::max(1.0, est)) {
            if (++stable >= 3) break;
        } else {
            stable = 0;
        }
        prev = est;
    }
    return std::min(est, 1.0);
}

}  // namespace

ProbabilityVector::ProbabilityVector(std::vector<double> weights, double tol)
    : w_(std::move(weights)) {
    if (w_.empty()) throw std::invalid_argument("ProbabilityVector: empty weight list");
    double sum = 0;
    for (double x : w_) {
        if (!(x >= 0.0))
            throw std::invalid_argument("ProbabilityVector: negative or NaN weight");
        sum += x;
    }
    if (std::abs(sum - 1.0) > tol)
        throw std::invalid_argument("ProbabilityVector: weights sum to " +
                                    std::to_string(sum) + ", expected 1");
}

double total_variation(const ProbabilityVector& p, const ProbabilityVector& q) {
    if (p.size() != q.size())
        throw std::invalid_argument("total_variation: dimension mismatch");
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

TransitionMatrix TransitionMatrix::from_entries(std::size_t dim, std::vector<double> row_major,
                                                double tol) {
    if (dim == 0) throw std::invalid_argument("TransitionMatrix: dimension must be positive");
    if (row_major.size() != dim * dim)
        throw std::invalid_argument("TransitionMatrix: entry count does not match dimension");
    TransitionMatrix P(dim);
    P.p_ = std::move(row_major);
    P.validate(tol);
    return P;
}

void TransitionMatrix::validate(double tol) const {
    for (double x : p_)
        if (!(x >= 0.0))
            throw std::invalid_argument("TransitionMatrix: negative or NaN entry");
    for (std::size_t y = 0; y < dim_; ++y) {
        double col = 0;
        for (std::size_t x = 0; x < dim_; ++x) col += p_[x * dim_ + y];
        if (std::abs(col - 1.0) > tol)
            throw std::invalid_argument("TransitionMatrix: column " + std::to_string(y) +
                                        " sums to " + std::to_string(col));
    }
}

std::vector<double> TransitionMatrix::apply(const std::vector<double>& v) const {
    if (v.size() != dim_)
        throw std::invalid_argument("TransitionMatrix::apply: dimension mismatch");
    std::vector<double> out(dim_, 0.0);
    for (std::size_t x = 0; x < dim_; ++x) {
        const double* row = p_.data() + x * dim_;
        double s = 0;
        for (std::size_t y = 0; y < dim_; ++y) s += row[y] * v[y];
        out[x] = s;
    }
    return out;
}

ProbabilityVector stationary_distribution(const TransitionMatrix& P, double tol) {
    P.validate();
    std::vector<double> v;
    bool converged = power_fixed_point(P, tol, v);
    double l2 = estimate_lambda2(P, v);
    if (l2 > 1.0 - kDegenerateThreshold)
        throw DegenerateChainError(
            "stationary_distribution: degenerate chain (|lambda_2| = " + std::to_string(l2) +
            "), no unique stationary distribution");
    if (!converged)
        throw std::runtime_error("stationary_distribution: power iteration did not converge");
    // Clean up accumulated rounding so the result is a valid distribution.
    double sum = std::accumulate(v.begin(), v.end(), 0.0);
    for (auto& x : v) x = std::max(x, 0.0) / sum;
    return ProbabilityVector(std::move(v), 1e-9);
}

bool check_detailed_balance(const TransitionMatrix& P, const ProbabilityVector& pi,
                            double tol) {
    if (pi.size() != P.dim())
        throw std::invalid_argument("check_detailed_balance: dimension mismatch");
    for (std::size_t x = 0; x < P.dim(); ++x)
        for (std::size_t y = x + 1; y < P.dim(); ++y)
            if (std::abs(pi[x] * P(y, x) - pi[y] * P(x, y)) > tol) return false;
    return true;
}

SpectralResult spectral_gap(const TransitionMatrix& P) {
    P.validate();
    std::vector<double> pi;
    power_fixed_point(P, 1e-13, pi);
    SpectralResult r;
    r.lambda2 = estimate_lambda2(P, pi);
    r.gap = std::max(0.0, 1.0 - r.lambda2);
    if (r.gap <= kDegenerateThreshold) {
        r.tau = std::numeric_limits<double>::infinity();
        r.tau_finite = false;
    } else {
        r.tau = 1.0 / r.gap;
        r.tau_finite = true;
    }
    return r;
}

ProbabilityVector distribution_after(const TransitionMatrix& P, std::size_t x0,
                                     std::int64_t steps) {
    if (x0 >= P.dim())
        throw std::invalid_argument("distribution_after: start state out of range");
    if (steps < 0) throw std::invalid_argument("distribution_after: negative step count");
    std::vector<double> v(P.dim(), 0.0);
    v[x0] = 1.0;
    for (std::int64_t t = 0; t < steps; ++t) v = P.apply(v);
    return ProbabilityVector(std::move(v), 1e-9);
}

std::uint64_t StateSpace::admissible_count() const {
    if (!admissible) return cardinality;
    std::uint64_t c = 0;
    for (std::uint64_t x = 0; x < cardinality; ++x)
        if (admissible(x)) ++c;
    return c;
}

void StateSpace::validate() const {
    if (bits < 0 || bits > 63) throw std::invalid_argument("StateSpace: bits out of range");
    if (cardinality == 0 || cardinality > (std::uint64_t{1} << bits))
        throw std::invalid_argument("StateSpace: cardinality inconsistent with bit count");
}

// ---- JSON layouts -----------------------------------------------------
//
// matrix: {"dim": D, "entries": [D*D numbers, row-major]}
// vector: {"weights": [numbers]}

std::string TransitionMatrix::to_json_text() const {
    nlohmann::json j;
    j["dim"] = dim_;
    j["entries"] = p_;
    return j.dump();
}

TransitionMatrix TransitionMatrix::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object() || !j.contains("dim") || !j.contains("entries"))
        throw std::invalid_argument("TransitionMatrix: expected {dim, entries}");
    for (auto& [key, _] : j.items())
        if (key != "dim" && key != "entries")
            throw std::invalid_argument("TransitionMatrix: unknown field '" + key + "'");
    std::size_t dim = j["dim"].get<std::size_t>();
    std::vector<double> entries = j["entries"].get<std::vector<double>>();
    return from_entries(dim, std::move(entries));
}

std::string ProbabilityVector::to_json_text() const {
    nlohmann::json j;
    j["weights"] = w_;
    return j.dump();
}

ProbabilityVector ProbabilityVector::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object() || !j.contains("weights"))
        throw std::invalid_argument("ProbabilityVector: expected {weights}");
    for (auto& [key, _] : j.items())
        if (key != "weights")
            throw std::invalid_argument("ProbabilityVector: unknown field '" + key + "'");
    return ProbabilityVector(j["weights"].get<std::vector<double>>());
}

}  // namespace cftpq
