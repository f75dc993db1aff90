#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "sdi/coefficients.hpp"
#include "sdi/driver.hpp"
#include "sdi/semigroup.hpp"

namespace sdi {

struct GaussianInitial {
    Vec mean;
    Mat cov;
};
using InitialCondition = std::variant<Vec, GaussianInitial>;

// Full problem instance for dX in AX dt + F(t,X) dt + G(t,X) dW on [0,T],
// at state dimension dE and noise dimension dH. G takes values in bodies of
// R^{dE*dH} under row-major matrix flattening.
struct InclusionScenario {
    int dE;
    int dH;
    SemigroupOperator op;
    MultiMap F;
    MultiMap G;
    CoefficientHypotheses hyp;
    InitialCondition xi;
    double T;
    SelectionRule selector;
    double norm_cap = 1e12;
    bool store_selections = true;
    std::uint64_t scenario_hash = 0;
};

void validate_scenario(const InclusionScenario& sc);

// Draws the initial state for a path; deterministic given (seed, path).
class InitialSampler {
public:
    explicit InitialSampler(const InclusionScenario& sc);
    Vec operator()(std::uint64_t seed, std::int64_t path_index) const;

private:
    bool deterministic_;
    Vec fixed_;
    Vec mean_;
    Mat chol_;
};

// Simulated trajectories on a uniform grid, plus the selected coefficient
// values when storage is enabled. Selections are indexed by their selection
// time: selections_f[p][j] is the drift value chosen at (t_j, X(t_j)), which
// the lagged recursion consumes at step j + lag_steps.
struct PathEnsemble {
    std::uint64_t scenario_hash = 0;
    std::int64_t lag_n = 0;      // Tonelli parameter; 0 means lag-free
    std::int64_t lag_steps = 0;  // lag / dt
    double dt = 0.0;
    double T = 0.0;
    std::int64_t steps = 0;
    std::int64_t paths = 0;
    int dE = 0;
    int dH = 0;
    std::uint64_t seed = 0;
    std::vector<double> trajectories;  // paths x (steps+1) x dE
    bool has_selections = false;
    std::vector<double> selections_f;  // paths x steps x dE
    std::vector<double> selections_g;  // paths x steps x (dE*dH)

    [[nodiscard]] Eigen::Map<const Vec> state(std::int64_t p, std::int64_t k) const {
        return {trajectories.data() + (p * (steps + 1) + k) * dE, dE};
    }
    [[nodiscard]] Eigen::Map<const Vec> selection_f(std::int64_t p, std::int64_t j) const {
        return {selections_f.data() + (p * steps + j) * dE, dE};
    }
    [[nodiscard]] Eigen::Map<const Vec> selection_g(std::int64_t p, std::int64_t j) const {
        return {selections_g.data() + (p * steps + j) * (dE * dH),
                static_cast<Eigen::Index>(dE) * dH};
    }
};

// Delayed scheme on the grid: trajectories equal the initial state up to the
// lag 1/n, and beyond it follow
//   X_{k+1} = S(dt) X_k + S((L+1) dt) [ f_{k-L} dt + g_{k-L} dW_{k-L} ],
// the incremental form of left-endpoint quadrature of the lagged
// variation-of-constants formula. Selections are taken at (t_j, X(t_j)) by
// the scenario rule, entirely explicit. Requires 1/n = L dt for integer
// L >= 1. Trajectories exceeding norm_cap abort with BlowupError naming the
// path and step.
PathEnsemble tonelli_step_ensemble(const InclusionScenario& sc, std::int64_t n, double dt,
                                   std::int64_t paths, std::uint64_t seed, int threads = 1);

// One application of the solution operator: the (optionally lagged)
// convolution of coefficients selected along the input trajectories. With
// use_stored_selections the input's stored values are integrated instead of
// re-selecting.
PathEnsemble phi_apply(const InclusionScenario& sc, const PathEnsemble& X,
                       std::optional<std::int64_t> lag_n, bool use_stored_selections = false,
                       int threads = 1);

// Discrete residual Z(t) = -X(t) + S(t) xi + Int_0^t S(t-s) f ds
//                        + Int_0^t S(t-s) g dW
// over the stored selections; requires them. Returned flat as
// paths x (steps+1) x dE.
std::vector<double> residual_Z(const InclusionScenario& sc, const PathEnsemble& X,
                               int threads = 1);

// Lag-free exponential-Euler benchmark; requires singleton-valued F and G
// (checked on samples).
PathEnsemble mild_euler_reference(const InclusionScenario& sc, double dt, std::int64_t paths,
                                  std::uint64_t seed, int threads = 1);

// Contiguous-range parallel map over paths; results must be written to
// disjoint slices so the worker count never changes output.
void parallel_for_paths(std::int64_t paths, int threads,
                        const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace sdi
