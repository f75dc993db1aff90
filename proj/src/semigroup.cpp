#include "sdi/semigroup.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "sdi/errors.hpp"

namespace sdi {

namespace {

GrowthEnvelope fit_envelope(const Mat& A, double T, int grid) {
    if (!(T > 0.0)) throw Error("growth_envelope: horizon must be > 0");
    if (grid < 2) throw Error("growth_envelope: grid must have at least 2 points");

    GrowthEnvelope env;
    env.fit_horizon = T;

    Eigen::EigenSolver<Mat> es(A, /*computeEigenvectors=*/false);
    env.omega = es.eigenvalues().real().maxCoeff();

    double m = 1.0;  // t = 0 gives ||I|| = 1
    double m_low = 1.0;
    for (int i = 1; i <= grid; ++i) {
        const double t = T * static_cast<double>(i) / grid;
        const Mat e = (t * A).exp();
        const double val = operator_norm(e) * std::exp(-env.omega * t);
        m = std::max(m, val);
        m_low = std::min(m_low, val);
    }
    // Headroom guards against peaks between grid points; a flat profile
    // (normal contractions, A = 0) needs none and keeps M = 1 exact.
    env.M = (m - m_low <= 1e-9 * m) ? m : 1.05 * m;
    env.M = std::max(env.M, 1.0);
    return env;
}

void assert_envelope(const Mat& A, const GrowthEnvelope& env, int grid) {
    for (int i = 0; i <= grid; ++i) {
        const double t = env.fit_horizon * static_cast<double>(i) / grid;
        const Mat e = (t * A).exp();
        if (operator_norm(e) > 1.01 * env.bound(t))
            throw Error("semigroup: fitted envelope violated at t = " + std::to_string(t));
    }
}

}  // namespace

SemigroupOperator::SemigroupOperator(Mat A, double fit_horizon, int fit_grid)
    : A_(std::move(A)), cache_(std::make_shared<ExpCache>()) {
    if (A_.rows() != A_.cols() || A_.rows() == 0)
        throw Error("semigroup: generator must be a nonempty square matrix");
    if (!A_.allFinite()) throw Error("semigroup: generator has non-finite entries");
    env_ = fit_envelope(A_, fit_horizon, fit_grid);
    assert_envelope(A_, env_, fit_grid);
}

Mat SemigroupOperator::exp_tA(double t) const {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->table.find(t);
    if (it != cache_->table.end()) return it->second;
    Mat e = (t * A_).exp();
    cache_->table.emplace(t, e);
    return e;
}

Vec SemigroupOperator::evolve(double t, const Vec& x) const {
    if (!(t >= 0.0)) throw Error("evolve: t must be >= 0");
    if (static_cast<int>(x.size()) != dim()) throw Error("evolve: dimension mismatch");
    if (!x.allFinite()) throw Error("evolve: non-finite state");
    if (t == 0.0) return x;
    return exp_tA(t) * x;
}

SemigroupOperator SemigroupOperator::yosida(int n) const {
    if (n <= 0) throw Error("yosida: n must be positive");
    if (static_cast<double>(n) <= env_.omega)
        throw Error("yosida: n = " + std::to_string(n) + " is not above the growth exponent omega = " +
                    std::to_string(env_.omega));
    const Mat resolvent_arg = static_cast<double>(n) * Mat::Identity(dim(), dim()) - A_;
    Eigen::FullPivLU<Mat> lu(resolvent_arg);
    if (!lu.isInvertible())
        throw Error("yosida: (nI - A) is singular for n = " + std::to_string(n));
    Mat An = static_cast<double>(n) * A_ * lu.inverse();
    return SemigroupOperator(std::move(An), env_.fit_horizon);
}

GrowthEnvelope growth_envelope(const SemigroupOperator& op, double T, int grid) {
    GrowthEnvelope env = fit_envelope(op.generator(), T, grid);
    return env;
}

}  // namespace sdi
