#include "cftpq/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cftpq {

namespace {

// 1 / (1 + exp(-t)) without overflow in either tail.
double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    double e = std::exp(t);
    return e / (1.0 + e);
}

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

// Local field J * sum of neighbour spins + h.
double local_field(const IsingModel& m, State x, int site) {
    int s = 0;
    for (int j : m.lattice.adj[site]) s += spin(x, j);
    return m.coupling_J * s + m.field_h;
}

bool neighbour_occupied(const HardCoreModel& m, State x, int site) {
    for (int j : m.lattice.adj[site])
        if (occupied(x, j)) return true;
    return false;
}

}  // namespace

void IsingModel::validate() const {
    if (!(beta >= 0.0)) throw std::invalid_argument("IsingModel: beta must be >= 0");
    if (!std::isfinite(coupling_J) || !std::isfinite(field_h) || !std::isfinite(beta))
        throw std::invalid_argument("IsingModel: non-finite parameter");
}

void HardCoreModel::validate() const {
    if (!(fugacity > 0.0) || !std::isfinite(fugacity))
        throw std::invalid_argument("HardCoreModel: fugacity must be positive and finite");
}

double energy(const IsingModel& m, State x) {
    double e = 0;
    for (auto [i, j] : m.lattice.bonds) e -= m.coupling_J * spin(x, i) * spin(x, j);
    for (int i = 0; i < m.lattice.n; ++i) e -= m.field_h * spin(x, i);
    return e;
}

double delta_energy(const IsingModel& m, State x, int site) {
    if (site < 0 || site >= m.lattice.n)
        throw std::invalid_argument("delta_energy: site out of range");
    // Flipping s_i negates every term containing it:
    // dE = 2 s_i (J * sum_neighbours s_j + h).
    return 2.0 * spin(x, site) * local_field(m, x, site);
}

double glauber_flip_prob(double delta_e, double beta) {
    return sigmoid(-beta * delta_e);
}

bool is_admissible(const HardCoreModel& m, State x) {
    for (auto [i, j] : m.lattice.bonds)
        if (occupied(x, i) && occupied(x, j)) return false;
    return true;
}

std::uint64_t admissible_count(const HardCoreModel& m) {
    std::uint64_t c = 0;
    for (State x = 0; x < (State{1} << m.lattice.n); ++x)
        if (is_admissible(m, x)) ++c;
    return c;
}

State first_admissible_state(const HardCoreModel&) { return 0; }

const Lattice& CoupledUpdate::lattice() const {
    return is_ising() ? ising().lattice : hardcore().lattice;
}

double CoupledUpdate::inverse_temperature() const {
    return is_ising() ? ising().beta : 1.0;
}

bool CoupledUpdate::monotone() const {
    return is_ising() && coupling == CouplingKind::HeatBath && ising().coupling_J > 0.0 &&
           flip_bias == 0.0;
}

StateSpace CoupledUpdate::state_space() const {
    StateSpace s;
    s.bits = sites();
    s.cardinality = state_count();
    if (!is_ising()) {
        HardCoreModel m = hardcore();
        s.admissible = [m](std::uint64_t x) { return is_admissible(m, x); };
    }
    return s;
}

void CoupledUpdate::validate() const {
    if (sites() > 63) throw std::invalid_argument("CoupledUpdate: more than 63 sites");
    if (is_ising()) {
        ising().validate();
    } else {
        hardcore().validate();
        if (coupling != CouplingKind::HeatBath)
            throw std::invalid_argument(
                "CoupledUpdate: the hard-core model only defines a heat-bath update");
    }
    if (!(flip_bias >= -1.0 && flip_bias <= 1.0))
        throw std::invalid_argument("CoupledUpdate: flip_bias out of range");
}

int site_at(const CoupledUpdate& u, const RngStream& rng, std::int64_t t) {
    int n = u.sites();
    if (n <= 0) throw std::invalid_argument("site_at: model has no sites");
    if (u.schedule == SiteSchedule::Sweep) {
        return static_cast<int>(((t % n) + n) % n);
    }
    int site = static_cast<int>(rng.alpha(t, n) * n);
    return std::min(site, n - 1);
}

State apply_update(const CoupledUpdate& u, State x, int site, double alpha) {
    if (site < 0 || site >= u.sites())
        throw std::invalid_argument("apply_update: site out of range");
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::invalid_argument("apply_update: alpha must lie in [0, 1)");

    if (u.is_ising()) {
        const IsingModel& m = u.ising();
        if (u.coupling == CouplingKind::Flip) {
            double p = clamp01(glauber_flip_prob(delta_energy(m, x, site), m.beta) + u.flip_bias);
            return alpha < p ? flip_bit(x, site) : x;
        }
        // Heat bath: redraw the site from its conditional law; the outcome
        // ignores the current value, so every trajectory writes the same
        // spin here once the neighbourhoods agree.
        double p_plus = clamp01(sigmoid(2.0 * m.beta * local_field(m, x, site)) + u.flip_bias);
        State up = x | (State{1} << site);
        State down = x & ~(State{1} << site);
        return alpha < p_plus ? up : down;
    }

    const HardCoreModel& m = u.hardcore();
    State vacated = x & ~(State{1} << site);
    if (neighbour_occupied(m, x, site)) return vacated;
    double p_occ = clamp01(m.fugacity / (1.0 + m.fugacity) + u.flip_bias);
    return alpha < p_occ ? (x | (State{1} << site)) : vacated;
}

State step(const CoupledUpdate& u, const RngStream& rng, std::int64_t t, State x) {
    int site = site_at(u, rng, t);
    return apply_update(u, x, site, rng.alpha(t, site));
}

namespace {

// Measure of alpha values that change site `site` of state y, together with
// the changed state.  Both couplings share the same single-site marginal, so
// the matrix entries for either are assembled from this one closed form;
// evaluating each coupling through its own expression would differ by an ulp
// and the two matrices are specified to be identical.
std::pair<State, double> move_measure(const CoupledUpdate& u, State y, int site) {
    if (u.is_ising()) {
        const IsingModel& m = u.ising();
        double q = clamp01(glauber_flip_prob(delta_energy(m, y, site), m.beta) + u.flip_bias);
        return {flip_bit(y, site), q};
    }
    const HardCoreModel& m = u.hardcore();
    if (neighbour_occupied(m, y, site)) {
        State vac = y & ~(State{1} << site);
        return {vac, occupied(y, site) ? 1.0 : 0.0};
    }
    double p_occ = clamp01(m.fugacity / (1.0 + m.fugacity) + u.flip_bias);
    double q = occupied(y, site) ? 1.0 - p_occ : p_occ;
    return {flip_bit(y, site), q};
}

}  // namespace

TransitionMatrix induced_site_matrix(const CoupledUpdate& u, int site,
                                     std::uint64_t max_states) {
    u.validate();
    std::uint64_t N = u.state_count();
    if (N > max_states)
        throw std::invalid_argument("induced_site_matrix: state space too large (" +
                                    std::to_string(N) + " states)");
    TransitionMatrix P(N);
    for (State y = 0; y < N; ++y) {
        auto [moved, q] = move_measure(u, y, site);
        P.at(moved, y) += q;
        P.at(y, y) += 1.0 - q;
    }
    return P;
}

TransitionMatrix induced_transition_matrix(const CoupledUpdate& u, std::uint64_t max_states) {
    u.validate();
    std::uint64_t N = u.state_count();
    int n = u.sites();
    if (n == 0) {
        TransitionMatrix P(1);
        P.at(0, 0) = 1.0;
        return P;
    }
    if (N > max_states)
        throw std::invalid_argument("induced_transition_matrix: state space too large (" +
                                    std::to_string(N) + " states)");
    // One update at a uniformly chosen site.  A sweep applies the same site
    // kernels in a fixed order; the uniform average is the schedule's
    // per-step kernel and the natural reversible comparison chain.
    TransitionMatrix P(N);
    double w = 1.0 / n;
    for (int site = 0; site < n; ++site) {
        for (State y = 0; y < N; ++y) {
            auto [moved, q] = move_measure(u, y, site);
            P.at(moved, y) += w * q;
            P.at(y, y) += w * (1.0 - q);
        }
    }
    return P;
}

ProbabilityVector gibbs_distribution(const CoupledUpdate& u, std::uint64_t max_states) {
    std::uint64_t N = u.state_count();
    if (N > max_states)
        throw std::invalid_argument("gibbs_distribution: state space too large");
    std::vector<double> logw(N, -std::numeric_limits<double>::infinity());
    if (u.is_ising()) {
        const IsingModel& m = u.ising();
        for (State x = 0; x < N; ++x) logw[x] = -m.beta * energy(m, x);
    } else {
        const HardCoreModel& m = u.hardcore();
        double ll = std::log(m.fugacity);
        for (State x = 0; x < N; ++x)
            if (is_admissible(m, x)) logw[x] = ll * popcount(x);
    }
    double top = *std::max_element(logw.begin(), logw.end());
    std::vector<double> w(N);
    double z = 0;
    for (State x = 0; x < N; ++x) z += (w[x] = std::exp(logw[x] - top));
    for (auto& v : w) v /= z;
    return ProbabilityVector(std::move(w), 1e-9);
}

RestrictedChain restricted_chain(const CoupledUpdate& u, std::uint64_t max_states) {
    TransitionMatrix full = induced_transition_matrix(u, max_states);
    StateSpace space = u.state_space();
    std::vector<State> states;
    for (State x = 0; x < u.state_count(); ++x)
        if (!space.admissible || space.admissible(x)) states.push_back(x);

    std::size_t k = states.size();
    ProbabilityVector gibbs = gibbs_distribution(u, max_states);
    std::vector<double> pi(k);
    TransitionMatrix P(k);
    for (std::size_t b = 0; b < k; ++b) {
        pi[b] = gibbs[states[b]];
        for (std::size_t a = 0; a < k; ++a) P.at(a, b) = full(states[a], states[b]);
    }
    // Transitions out of an admissible state stay admissible, so the
    // restriction is itself a stochastic matrix.
    P.validate(1e-9);
    double sum = 0;
    for (double x : pi) sum += x;
    for (auto& x : pi) x /= sum;
    return {std::move(P), std::move(states), ProbabilityVector(std::move(pi), 1e-9)};
}

double magnetization(State x, int n) {
    if (n == 0) return 0.0;
    return (2.0 * popcount(x) - n) / n;
}

double occupation(State x) { return static_cast<double>(popcount(x)); }

}  // namespace cftpq
