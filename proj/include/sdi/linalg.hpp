#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

namespace sdi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Strict lexicographic order on coordinate vectors (used for deterministic
// tie-breaking).
inline bool lex_less(const Vec& a, const Vec& b) {
    const Eigen::Index n = std::min(a.size(), b.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return a.size() < b.size();
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

// Largest singular value.
inline double operator_norm(const Mat& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

// Row-major flattening of a dE x dH matrix, and its inverse. Bodies of
// matrix-valued coefficients live in R^{dE*dH} under this identification.
inline Vec flatten(const Mat& m) {
    Vec v(m.rows() * m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v[i * m.cols() + j] = m(i, j);
    return v;
}

inline Mat unflatten(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[i * cols + j];
    return m;
}

// Kahan-compensated accumulator. Reductions over ensembles use a fixed
// ascending order plus compensation so results do not depend on the worker
// count.
class CompensatedSum {
public:
    void add(double x) {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    [[nodiscard]] double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

}  // namespace sdi
