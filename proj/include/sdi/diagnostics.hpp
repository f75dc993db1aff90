#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdi/semigroup.hpp"
#include "sdi/tonelli.hpp"

namespace sdi {

struct MomentEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t paths = 0;
};

// Monte Carlo estimate of E[ sup_{0<=s<=T} ||X(s)||^p ].
MomentEstimate sup_moment(const PathEnsemble& X, double p);

// E Int_0^T ||X(t)||^p dt by trapezoid in t, averaged over paths.
MomentEstimate integral_moment(const PathEnsemble& X, double p);

// Deterministic piecewise-constant matrix-valued process: values[i] holds on
// [times[i], times[i+1]) and the last value extends to infinity.
struct StepProcess {
    std::vector<double> times;
    std::vector<Mat> values;

    [[nodiscard]] const Mat& at(double t) const;
    [[nodiscard]] double integral_norm_p(double t, double p) const;  // Int_0^t ||g||_HS^p
};

// Empirical check of the p-th moment bound for the stochastic convolution
//   E sup_{s<=t} || Int_0^s S(s-r) g dW ||^p <= C t^{p/2-1} E Int_0^t ||g||^p.
// Fits the smallest admissible constant per ladder time; the check passes
// when the fitted constants stay within a factor 3 of each other, evidence
// that one uniform constant works.
struct ConvolutionCheck {
    double fit_Cp = 0.0;
    bool stable = false;
    double ratio_spread = 0.0;
    std::vector<std::pair<double, double>> per_t;  // t -> fitted constant
};

ConvolutionCheck convolution_inequality_check(const SemigroupOperator& op, const StepProcess& g,
                                              double p, std::span<const double> t_ladder,
                                              std::int64_t paths, std::uint64_t seed, double dt,
                                              int dH, int threads = 1);

// For each delta: max over grid pairs (s,t) with 0 < t-s <= delta of the
// empirical probability P(||X(t) - X(s)|| > eta). Deterministic grid times
// stand in for stopping times. Deltas below the grid step use adjacent pairs.
using AldousTable = std::vector<std::pair<double, double>>;
AldousTable aldous_statistic(const PathEnsemble& X, std::span<const double> deltas, double eta);

// Bounded-Lipschitz (Dudley) distance between the empirical path laws,
// bounded below through the dictionary u -> max(0, 1 - dist_sup(u, anchor)),
// with anchors drawn from both ensembles by a seeded counter generator. The
// estimate is symmetric, lies in [0,1], and is nondecreasing in the anchor
// count.
double bl_distance(const PathEnsemble& a, const PathEnsemble& b, int anchors, std::uint64_t seed);

// Tightness surrogate: fraction of trajectories NOT within sup-distance eps
// of a farthest-point greedy anchor set, per ensemble and pooled (last
// curve).
struct CoverageCurve {
    std::string label;
    std::vector<double> radii;
    std::vector<double> uncovered;
};

std::vector<CoverageCurve> noncompactness_proxy(std::span<const PathEnsemble> ensembles,
                                                std::span<const double> radius_grid,
                                                int max_anchors);

// Constant of the a-priori moment bound E Int_0^T ||X||^p dt <= T c e^{cT},
//   c = 3^{p-1} C_B(T)^p ( E||xi||^p + 2^{p-1} eta^p (1 + C_conv) T ),
// kept in log space because c is typically astronomically large.
struct GronwallBound {
    double c = 0.0;
    double log_bound = 0.0;  // log(T c) + c T
};

GronwallBound gronwall_bound(double p, double C_B_T, double E_xi_p, double eta, double C_conv,
                             double T);

struct ResidualStats {
    MomentEstimate mean_terminal{};  // mean of ||Z(T)|| with standard error
    double p90_terminal = 0.0;       // nearest-rank 90th percentile
};

ResidualStats residual_stats(const PathEnsemble& X, std::span<const double> Z);

// Structured results for a ladder study.
struct DiagnosticsReport {
    std::uint64_t scenario_hash = 0;
    double p = 0.0;
    MomentEstimate sup_moment_p{};
    double gronwall_c = 0.0;
    double gronwall_log_bound = 0.0;
    double gronwall_log_lhs = 0.0;
    bool gronwall_pass = true;
    double conv_constant_fit = 0.0;
    bool conv_stable = true;
    AldousTable aldous_table;
    std::vector<std::int64_t> ladder;
    std::vector<std::vector<double>> bl_matrix;  // pairwise over the ladder
    struct ResidualRow {
        std::int64_t n;
        double mean;
        double std_error;
        double p90;
    };
    std::vector<ResidualRow> residual_table;
    std::vector<CoverageCurve> coverage;
    std::vector<std::pair<std::string, bool>> verdicts;
};

// report.csv rows under the exact header `metric,param,value,std_error`.
void write_report_csv(const DiagnosticsReport& report, const std::string& path);
void write_report_json(const DiagnosticsReport& report, const std::string& path);

}  // namespace sdi
