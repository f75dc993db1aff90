#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sdi/convex.hpp"

namespace sdi {

// Set-valued coefficient: (t, x) -> nonempty compact convex subset of the
// codomain. Evaluation functions must be pure and reentrant.
class MultiMap {
public:
    using EvalFn = std::function<ConvexBody(double, const Vec&)>;

    MultiMap(EvalFn eval, int domain_dim, int codomain_dim, std::string description);

    ConvexBody operator()(double t, const Vec& x) const;

    [[nodiscard]] int domain_dim() const { return domain_dim_; }
    [[nodiscard]] int codomain_dim() const { return codomain_dim_; }
    [[nodiscard]] const std::string& description() const { return description_; }

private:
    EvalFn eval_;
    int domain_dim_;
    int codomain_dim_;
    std::string description_;
};

// Comparison modulus L(t, u) used to bound p-th powers of Hausdorff
// increments of the coefficients.
class OsgoodModulus {
public:
    using EvalFn = std::function<double(double, double)>;

    OsgoodModulus(EvalFn eval, std::string label);

    double operator()(double t, double u) const;
    [[nodiscard]] const std::string& label() const { return label_; }

private:
    EvalFn eval_;
    std::string label_;
};

struct CoefficientHypotheses {
    double eta;              // growth constant, > 0
    OsgoodModulus modulus;   // comparison modulus L
    double p;                // moment exponent, > 2

    CoefficientHypotheses(double eta_, OsgoodModulus modulus_, double p_);
};

struct Sample {
    double t;
    Vec x;
};

struct SamplePair {
    double t;
    Vec x;
    Vec y;
};

// Growth check: farthest-point norm of F(t,x) against eta (1 + ||x||).
// Violations are report content, not errors.
struct GrowthReport {
    double worst_ratio = 0.0;
    Sample worst{};
    std::size_t violations = 0;
    bool pass = true;
};

GrowthReport check_growth(const MultiMap& F, const CoefficientHypotheses& hyp,
                          std::span<const Sample> samples);

// Modulus check: Hausd(F(t,x), F(t,y))^p against L(t, ||x-y||^p) per pair.
struct ModulusReport {
    double worst_ratio = 0.0;
    SamplePair worst{};
    std::size_t violations = 0;
    bool pass = true;
    double hausdorff_tol = 1e-6;
};

ModulusReport check_modulus(const MultiMap& F, const CoefficientHypotheses& hyp,
                            std::span<const SamplePair> pairs, double hausdorff_tol = 1e-6);

// Shape diagnostics for a modulus: nondecreasing and convex in u on sampled
// grids, zero at zero, finite on the sampled range.
struct ModulusShapeReport {
    bool nondecreasing = true;
    bool convex = true;
    bool zero_at_zero = true;
    bool finite = true;
    double worst_convexity_defect = 0.0;
};

ModulusShapeReport check_modulus_shape(const OsgoodModulus& L, double T, int t_grid, int u_grid,
                                       double u_max);

// One-sided comparison oracle for the implication
//   [ R(t) <= k Int_0^t L(s, R(s)) ds  for all t ]  =>  R = 0,
// run as the decreasing iteration R_{m+1}(t) = k Int_0^t L(s, R_m(s)) ds from
// the constant R0 with trapezoidal quadrature. If the iterates stabilize at a
// positive level, a nonzero subsolution exists and the implication fails; a
// vanishing limit is numerical evidence (not proof) that it holds.
enum class OsgoodVerdict { osgood_pass, osgood_fail, inconclusive };

struct OsgoodResult {
    double limit_sup = 0.0;
    OsgoodVerdict verdict = OsgoodVerdict::inconclusive;
    double working_R0 = 0.0;  // after any automatic inflation
    bool inflated = false;
    bool dominance = true;    // R_1 <= R_0 established on the grid
    int iterations_run = 0;
    double last_change = 0.0;
    bool stabilized = false;
};

OsgoodResult osgood_iterate(const OsgoodModulus& L, double k, double T, double R0, int grid,
                            int iters);

const char* to_string(OsgoodVerdict v);

// Selection rules realizing pointwise choices from a multimap.
struct SteinerRule {
    QuadratureSpec quad{};
};
struct SupportRule {
    Direction u;
};
struct VertexRandomRule {
    uint64_t seed = 0;
};
using SelectionRule = std::variant<SteinerRule, SupportRule, VertexRandomRule>;

using Selector = std::function<Vec(double, const Vec&)>;

// Builds the selection function for the rule. Membership of the selected
// values is certified on the provided samples via distance_to_point; failure
// raises MembershipError with the worst residual.
Selector caratheodory_selector(const MultiMap& F, const SelectionRule& rule,
                               std::span<const Sample> certification_samples = {},
                               double tol = 1e-6);

// --- Built-in coefficient families -----------------------------------------

// Translation-equivariant tube F(t,x) = center + B x + radius_fn(t) * body0.
MultiMap affine_tube(Vec center, Mat B, ConvexBody body0,
                     std::function<double(double)> radius_fn, std::string description);

// Singleton matrix-valued map t -> {M(t)}, flattened row-major to R^{rows*cols}.
MultiMap singleton_matrix(std::function<Mat(double)> matrix_fn, int domain_dim, int rows,
                          int cols, std::string description);

// Scalar singleton drift whose modulus of continuity is log-linear rather
// than Lipschitz; satisfies the log-linear modulus below with constant C.
MultiMap osgood_scalar_drift(double C, double p);

OsgoodModulus linear_modulus(double C);
OsgoodModulus loglinear_modulus(double C);  // C u (1 - log u) near 0, clamped linear above 1
OsgoodModulus sqrt_modulus(double C);

}  // namespace sdi
