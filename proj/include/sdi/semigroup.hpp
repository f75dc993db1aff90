#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "sdi/linalg.hpp"

namespace sdi {

// Exponential growth envelope ||e^{tA}||_op <= M e^{omega t}, with the
// running supremum C_B(t) = sup_{0<=s<=t} M e^{omega s}.
struct GrowthEnvelope {
    double M = 1.0;
    double omega = 0.0;
    double fit_horizon = 1.0;

    [[nodiscard]] double bound(double t) const { return M * std::exp(omega * t); }
    [[nodiscard]] double C_B(double t) const { return M * std::exp(std::max(omega, 0.0) * t); }
};

// Matrix generator A together with evaluators for the semigroup S(t) = e^{tA}.
// (M, omega) are fitted at construction: omega is the largest eigenvalue real
// part, M the grid supremum of ||e^{tA}|| e^{-omega t} with 5% headroom. The
// envelope is then asserted on the fitting grid with a 1% violation margin.
// Instances are immutable; the exponential cache is shared and lock-guarded,
// so concurrent use is safe.
class SemigroupOperator {
public:
    explicit SemigroupOperator(Mat A, double fit_horizon = 1.0, int fit_grid = 64);

    [[nodiscard]] const Mat& generator() const { return A_; }
    [[nodiscard]] int dim() const { return static_cast<int>(A_.rows()); }
    [[nodiscard]] const GrowthEnvelope& envelope() const { return env_; }

    // e^{tA}, memoized per t within the lifetime of this operator.
    [[nodiscard]] Mat exp_tA(double t) const;

    // S(t) x for t >= 0.
    [[nodiscard]] Vec evolve(double t, const Vec& x) const;

    // Yosida approximant A_n = n A (nI - A)^{-1}; requires n > omega and
    // an invertible resolvent, otherwise throws naming n.
    [[nodiscard]] SemigroupOperator yosida(int n) const;

private:
    struct ExpCache {
        std::mutex mutex;
        std::map<double, Mat> table;
    };

    Mat A_;
    GrowthEnvelope env_;
    std::shared_ptr<ExpCache> cache_;
};

// Fits and certifies (M, omega) on [0, T]; the returned envelope satisfies
// ||e^{tA}||_op <= M e^{omega t} on the evaluation grid.
GrowthEnvelope growth_envelope(const SemigroupOperator& op, double T, int grid);

}  // namespace sdi
