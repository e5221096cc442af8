#pragma once

#include <bit>
#include <cstdint>
#include <variant>

#include "cftpq/chain.hpp"
#include "cftpq/lattice.hpp"
#include "cftpq/rng.hpp"

namespace cftpq {

/// Configurations are packed into the bits of an integer: bit i set means
/// spin i is +1 (Ising) or site i is occupied (lattice gas).
using State = std::uint64_t;

inline int spin(State x, int i) { return (x >> i) & 1 ? +1 : -1; }
inline bool occupied(State x, int i) { return (x >> i) & 1; }
inline State flip_bit(State x, int i) { return x ^ (State{1} << i); }
inline int popcount(State x) { return std::popcount(x); }

/// Nearest-neighbour Ising model with energy
///   E(x) = -J sum_bonds s_i s_j - h sum_i s_i,   s_i in {-1, +1}.
struct IsingModel {
    Lattice lattice;
    double coupling_J = 1.0;
    double field_h = 0.0;
    double beta = 1.0;

    void validate() const;
};

/// Hard-core lattice gas: occupied sites may not be adjacent; the weight of
/// an admissible configuration is fugacity^(occupied count).
struct HardCoreModel {
    Lattice lattice;
    double fugacity = 1.0;

    void validate() const;
};

double energy(const IsingModel& m, State x);

/// Energy change from flipping spin `site`; O(degree), and exactly equal to
/// energy(flip) - energy(x).
double delta_energy(const IsingModel& m, State x, int site);

/// Glauber acceptance probability 1 / (1 + exp(beta * delta_e)), evaluated
/// through exp of a sign-split argument so large |beta*delta_e| saturates to
/// 0 or 1 instead of overflowing.
double glauber_flip_prob(double delta_e, double beta);

bool is_admissible(const HardCoreModel& m, State x);
std::uint64_t admissible_count(const HardCoreModel& m);

/// Lowest admissible encoding (the empty configuration, always admissible).
State first_admissible_state(const HardCoreModel& m);

enum class CouplingKind { HeatBath, Flip };
enum class SiteSchedule { Sweep, RandomSite };

/// A single-site update family phi(x, alpha) shared across all trajectories:
/// one alpha per time step drives every copy of the chain, which is what
/// makes trajectories from different starts coalesce.
///
///  - heat-bath: the site is redrawn from its conditional distribution; the
///    new value depends on alpha and the neighbours but not on the current
///    value of the site (monotone for ferromagnetic couplings).
///  - flip: propose flipping the current value, accept iff
///    alpha < glauber_flip_prob(delta_E).
///
/// Both couplings induce identical single-site transition probabilities;
/// they differ only as joint maps.
struct CoupledUpdate {
    std::variant<IsingModel, HardCoreModel> model;
    CouplingKind coupling = CouplingKind::HeatBath;
    SiteSchedule schedule = SiteSchedule::Sweep;

    /// Additive bias on update probabilities; nonzero values deliberately
    /// break reversibility (fault injection for the validation suite).
    double flip_bias = 0.0;

    bool is_ising() const { return std::holds_alternative<IsingModel>(model); }
    const IsingModel& ising() const { return std::get<IsingModel>(model); }
    const HardCoreModel& hardcore() const { return std::get<HardCoreModel>(model); }

    const Lattice& lattice() const;
    int sites() const { return lattice().n; }
    std::uint64_t state_count() const { return std::uint64_t{1} << sites(); }
    double inverse_temperature() const;

    /// Heat-bath updates of a ferromagnetic Ising model preserve the
    /// componentwise spin order; only then may a sampler track just the
    /// extremal pair.
    bool monotone() const;

    StateSpace state_space() const;
    void validate() const;
};

/// Site updated at time t: the sweep schedule cycles sites in index order
/// (t = -n..-1 covers 0..n-1); the random schedule draws the site from
/// alpha(t, n), the substep one past the last site index.
int site_at(const CoupledUpdate& u, const RngStream& rng, std::int64_t t);

/// Apply one coupled update at an explicit site; alpha in [0,1).
State apply_update(const CoupledUpdate& u, State x, int site, double alpha);

/// Apply the update for time step t: resolve the site from the schedule,
/// fetch alpha(t, site) and update.  All randomness comes from `rng`, so
/// re-evaluating any window of steps replays the same maps.
State step(const CoupledUpdate& u, const RngStream& rng, std::int64_t t, State x);

/// Exact one-step transition matrix of the update, integrating over alpha
/// (the alpha-dependence is piecewise constant with a single breakpoint per
/// site, so the integral is a finite sum) and averaging uniformly over the
/// updated site.  Requires 2^n <= max_states.
TransitionMatrix induced_transition_matrix(const CoupledUpdate& u,
                                           std::uint64_t max_states = 1024);

/// Same, for a single fixed site.
TransitionMatrix induced_site_matrix(const CoupledUpdate& u, int site,
                                     std::uint64_t max_states = 1024);

/// Equilibrium distribution over all 2^n encodings: Boltzmann weights for
/// Ising, fugacity^occupation on admissible encodings (zero elsewhere) for
/// the hard-core gas.
ProbabilityVector gibbs_distribution(const CoupledUpdate& u,
                                     std::uint64_t max_states = 1 << 22);

/// Chain restricted to admissible encodings (identity relabelling for models
/// without an admissibility constraint): transition matrix, the states in
/// index order, and the equilibrium distribution on them.
struct RestrictedChain {
    TransitionMatrix P;
    std::vector<State> states;
    ProbabilityVector pi;
};
RestrictedChain restricted_chain(const CoupledUpdate& u, std::uint64_t max_states = 1024);

// Named observables.
double magnetization(State x, int n);            // mean spin in [-1, 1]
double occupation(State x);                      // occupied site count

}  // namespace cftpq
