// End-to-end acceptance runs: one pass/fail line per criterion, nonzero exit
// when any fails. Each criterion pins its tolerances in code and enforces its
// runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sdi/capi.h"
#include "sdi/config.hpp"
#include "sdi/diagnostics.hpp"
#include "sdi/scenario.hpp"
#include "sdi/tonelli.hpp"

using namespace sdi;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

class Criterion {
public:
    Criterion(int index, std::string name, double budget_seconds)
        : index_(index), name_(std::move(name)), budget_(budget_seconds),
          start_(std::chrono::steady_clock::now()) {}

    void check(bool ok, const std::string& what) {
        if (!ok) issues_.push_back(what);
    }

    void finish() {
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        if (elapsed > budget_)
            issues_.push_back("runtime " + std::to_string(elapsed) + "s exceeds " +
                              std::to_string(budget_) + "s");
        const bool pass = issues_.empty();
        std::printf("[%s] criterion %d: %s (%.1fs)\n", pass ? "PASS" : "FAIL", index_,
                    name_.c_str(), elapsed);
        for (const std::string& issue : issues_) std::printf("       - %s\n", issue.c_str());
        if (!pass) ++g_failures;
    }

private:
    int index_;
    std::string name_;
    double budget_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> issues_;
};

Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

std::string config_path(const std::string& name) {
    const char* dir = std::getenv("SDI_CONFIG_DIR");
    if (!dir) {
        std::fprintf(stderr, "SDI_CONFIG_DIR is not set\n");
        std::exit(2);
    }
    return (fs::path(dir) / name).string();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("sdi_acceptance_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Random bodies within the envelope every Hausdorff branch certifies
// (polytopes/balls in dimensions 1-3, rounded bodies in the plane).
ConvexBody random_body(std::mt19937& rng, int cls, int dim) {
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::uniform_real_distribution<double> rad(0.1, 1.5);
    std::uniform_int_distribution<int> nverts(1, 6);
    auto rv = [&](int d) {
        Vec v(d);
        for (int i = 0; i < d; ++i) v[i] = coord(rng);
        return v;
    };
    if (cls == 1) return ConvexBody::ball(rv(dim), rad(rng));
    std::vector<Vec> pts;
    const int k = nverts(rng);
    for (int i = 0; i < k; ++i) pts.push_back(rv(dim));
    ConvexBody hull = ConvexBody::hull(pts);
    if (cls == 2) return ConvexBody::minkowski_sum(hull, ConvexBody::ball(rv(dim), rad(rng)));
    return hull;
}

MultiMap const_point(Vec a, int dom) {
    const int cod = static_cast<int>(a.size());
    return MultiMap([a](double, const Vec&) { return ConvexBody::point(a); }, dom, cod, "const");
}

MultiMap zero_map(int dom, int cod) {
    return MultiMap([cod](double, const Vec&) { return ConvexBody::point(Vec(Vec::Zero(cod))); },
                    dom, cod, "zero");
}

// ---------------------------------------------------------------------------

void criterion_convex() {
    Criterion c(1, "convex-set algebra metric axioms and Steiner selection", 30.0);
    const double tol = 1e-6;
    std::mt19937 rng(2024);
    std::uniform_int_distribution<int> cls3(0, 1);

    int pairs = 0;
    while (pairs < 500) {
        const int dim = 1 + pairs % 3;
        const int cls = dim <= 2 ? pairs % 3 : cls3(rng);
        const ConvexBody a = random_body(rng, cls, dim);
        const ConvexBody b = random_body(rng, cls, dim);
        const ConvexBody mid = random_body(rng, cls, dim);
        ++pairs;

        const double dab = hausdorff_distance(a, b, tol);
        const double dba = hausdorff_distance(b, a, tol);
        c.check(dab == dba, "symmetry violated at pair " + std::to_string(pairs));
        c.check(dab >= 0.0, "negative distance");
        c.check(hausdorff_distance(a, a, tol) <= tol, "identity violated");
        const double dam = hausdorff_distance(a, mid, tol);
        const double dmb = hausdorff_distance(mid, b, tol);
        c.check(dab <= dam + dmb + 3.0 * tol,
                "triangle inequality violated at pair " + std::to_string(pairs));

        for (const ConvexBody* K : {&a, &b, &mid}) {
            const Vec s = steiner_point(*K);
            const double resid = distance_to_point(*K, s, tol).dist;
            c.check(resid <= 1e-6, "steiner membership residual " + std::to_string(resid));
        }
    }

    const Vec s = steiner_point(ConvexBody::hull({v2(0, 0), v2(1, 0), v2(0, 1)}));
    c.check(std::abs(s[0] - 0.375) <= 1e-6 && std::abs(s[1] - 0.375) <= 1e-6,
            "triangle Steiner point is not (0.375, 0.375)");
    c.finish();
}

void criterion_semigroup() {
    Criterion c(2, "semigroup law and Yosida ladder", 10.0);
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    std::uniform_real_distribution<double> time(0.0, 1.5);

    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + trial % 3;
        Mat A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = entry(rng);
        const double sr = Eigen::EigenSolver<Mat>(A, false).eigenvalues().cwiseAbs().maxCoeff();
        if (sr > 4.0) A *= 4.0 / sr;
        SemigroupOperator op(A);
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = entry(rng);
        const double s = time(rng);
        const double t = time(rng);
        const double defect = (op.evolve(s, op.evolve(t, x)) - op.evolve(s + t, x)).norm();
        c.check(defect <= 1e-8, "semigroup law defect " + std::to_string(defect));
    }

    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 3;
        Mat A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = entry(rng);
        A = 0.5 * (A + A.transpose()).eval();
        const double sr = Eigen::EigenSolver<Mat>(A, false).eigenvalues().cwiseAbs().maxCoeff();
        if (sr > 3.9) A *= 3.9 / sr;
        SemigroupOperator op(A);
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = entry(rng);
        double prev = std::numeric_limits<double>::infinity();
        for (int m : {4, 16, 64, 256}) {
            const double err = ((op.yosida(m).generator() - A) * x).norm();
            c.check(err <= prev + 1e-9, "Yosida ladder increased at n = " + std::to_string(m));
            prev = err;
        }
    }
    c.finish();
}

void criterion_osgood() {
    Criterion c(3, "Osgood comparison oracle", 5.0);

    const double k = 1.0, C = 4.0, T = 1.0, R0 = 1.0;
    const OsgoodResult lin = osgood_iterate(linear_modulus(C), k, T, R0, 2048, 60);
    c.check(lin.verdict == OsgoodVerdict::osgood_pass, "linear modulus not passed");
    c.check(lin.limit_sup <= 1e-8 * lin.working_R0, "linear limit above 1e-8 R0");
    const OsgoodResult lin5 = osgood_iterate(linear_modulus(C), k, T, R0, 2048, 5);
    const double closed = R0 * std::pow(k * C * T, 5) / 120.0;  // factorial decay
    c.check(std::abs(lin5.limit_sup - closed) <= 1e-2 * closed,
            "factorial-decay cross-check failed: " + std::to_string(lin5.limit_sup) + " vs " +
                std::to_string(closed));

    const double ks = 2.0;
    const OsgoodResult sq = osgood_iterate(sqrt_modulus(1.0), ks, T, 0.5, 2048, 200);
    const double maximal = std::pow(ks * T / 2.0, 2);
    c.check(sq.verdict == OsgoodVerdict::osgood_fail, "sqrt modulus not flagged");
    c.check(std::abs(sq.limit_sup - maximal) <= 0.10 * maximal,
            "sqrt limit " + std::to_string(sq.limit_sup) + " not within 10% of " +
                std::to_string(maximal));
    c.finish();
}

void criterion_ou() {
    Criterion c(4, "Ornstein-Uhlenbeck terminal moments", 120.0);
    const BuiltScenario built = build_scenario(parse_config_file(config_path("ou.cfg")));
    const InclusionScenario& sc = built.scenario;
    const double lambda = 0.1, sigma = 1.0, x0 = 1.0;

    const PathEnsemble e =
        tonelli_step_ensemble(sc, 64, sc.T / 1024.0, 10000, built.run.seed, 2);
    double sum = 0.0, sumsq = 0.0;
    for (std::int64_t p = 0; p < e.paths; ++p) {
        const double x = e.state(p, e.steps)[0];
        sum += x;
        sumsq += x * x;
    }
    const double n = static_cast<double>(e.paths);
    const double mean = sum / n;
    const double var = (sumsq - n * mean * mean) / (n - 1.0);

    const double mean_target = std::exp(-lambda * sc.T) * x0;
    const double var_target =
        sigma * sigma * (1.0 - std::exp(-2.0 * lambda * sc.T)) / (2.0 * lambda);
    const double se_mean = std::sqrt(var / n);
    const double se_var = var * std::sqrt(2.0 / (n - 1.0));

    c.check(std::abs(mean - mean_target) <= 3.0 * se_mean,
            "mean " + std::to_string(mean) + " vs " + std::to_string(mean_target) +
                " (3se = " + std::to_string(3.0 * se_mean) + ")");
    c.check(std::abs(var - var_target) <= 3.0 * se_var,
            "variance " + std::to_string(var) + " vs " + std::to_string(var_target) +
                " (3se = " + std::to_string(3.0 * se_var) + ")");
    c.finish();
}

struct LadderOutcome {
    std::vector<double> residual_means;
    std::vector<double> integral_moments;
    double e_xi_p = 0.0;
};

LadderOutcome run_tube_ladder(const BuiltScenario& built) {
    LadderOutcome out;
    InclusionScenario sc = built.scenario;
    sc.store_selections = true;
    for (std::int64_t n : built.run.n_ladder) {
        const PathEnsemble e =
            tonelli_step_ensemble(sc, n, built.run.dt, built.run.paths, built.run.seed, 2);
        const std::vector<double> z = residual_Z(sc, e, 2);
        out.residual_means.push_back(residual_stats(e, z).mean_terminal.value);
        out.integral_moments.push_back(integral_moment(e, sc.hyp.p).value);
        if (out.e_xi_p == 0.0) {
            double acc = 0.0;
            for (std::int64_t p = 0; p < e.paths; ++p)
                acc += std::pow(e.state(p, 0).norm(), sc.hyp.p);
            out.e_xi_p = acc / static_cast<double>(e.paths);
        }
    }
    return out;
}

void criterion_residual_and_gronwall() {
    Criterion c5(5, "residual convergence along the scheme ladder", 300.0);

    // Deterministic constant-drift case: the residual is exactly a/n.
    {
        const Vec a = v2(0.5, 0.25);
        InclusionScenario sc{2,
                             1,
                             SemigroupOperator(Mat::Zero(2, 2), 1.0),
                             const_point(a, 2),
                             zero_map(2, 2),
                             CoefficientHypotheses(1.0, linear_modulus(1.0), 4.0),
                             Vec(v2(1.0, -1.0)),
                             1.0,
                             SteinerRule{}};
        for (std::int64_t n : {2, 4, 8, 16, 32}) {
            const PathEnsemble e = tonelli_step_ensemble(sc, n, 1.0 / 512.0, 4, 3, 1);
            const std::vector<double> z = residual_Z(sc, e);
            const double mean = residual_stats(e, z).mean_terminal.value;
            const double expect = a.norm() / static_cast<double>(n);
            c5.check(std::abs(mean - expect) <= 1e-8,
                     "constant drift residual " + std::to_string(mean) + " vs a/n " +
                         std::to_string(expect));
        }
    }

    // Shipped multivalued benchmark on shared Brownian paths.
    const BuiltScenario built = build_scenario(parse_config_file(config_path("tube2d.cfg")));
    const LadderOutcome ladder = run_tube_ladder(built);
    for (std::size_t i = 1; i < ladder.residual_means.size(); ++i)
        c5.check(ladder.residual_means[i] < ladder.residual_means[i - 1],
                 "mean residual not strictly decreasing at ladder index " + std::to_string(i));
    c5.finish();

    // The a-priori moment bound, with the constant assembled from the fitted
    // envelope, the growth constant and the fitted convolution constant.
    Criterion c6(6, "integral moment bound across the ladder", 90.0);
    const InclusionScenario& sc = built.scenario;
    StepProcess ref;
    ref.times = {0.0};
    ref.values = {Mat::Ones(sc.dE, sc.dH)};
    const std::vector<double> conv_ladder = {sc.T / 8.0, sc.T / 4.0, sc.T / 2.0, sc.T};
    const ConvolutionCheck conv = convolution_inequality_check(
        sc.op, ref, sc.hyp.p, conv_ladder, 2000, 555, sc.T / 256.0, sc.dH, 2);
    const GrowthEnvelope env = growth_envelope(sc.op, sc.T, 64);
    const GronwallBound gb = gronwall_bound(sc.hyp.p, env.C_B(sc.T), ladder.e_xi_p, sc.hyp.eta,
                                            conv.fit_Cp, sc.T);
    for (double lhs : ladder.integral_moments)
        c6.check(std::log(lhs) <= std::log(2.0) + gb.log_bound,
                 "moment " + std::to_string(lhs) + " above twice the bound");
    c6.finish();
}

void criterion_convolution() {
    Criterion c(7, "stochastic convolution constant stability", 60.0);
    Mat A(2, 2);
    A << -0.3, 0.2, 0.0, -0.4;
    SemigroupOperator op(A);
    const double T = 1.0, p = 4.0;
    const std::vector<double> ladder = {T / 8.0, T / 4.0, T / 2.0, T};
    const double dt = T / 256.0;

    StepProcess g1;
    g1.times = {0.0};
    g1.values = {Mat::Ones(2, 1)};
    StepProcess g2;
    g2.times = {0.0, T / 2.0};
    g2.values = {1.5 * Mat::Ones(2, 1), 0.5 * Mat::Ones(2, 1)};
    StepProcess g3;
    g3.times = {0.0, T / 4.0, T / 2.0};
    g3.values = {0.5 * Mat::Ones(2, 1), Mat::Ones(2, 1), 2.0 * Mat::Ones(2, 1)};

    int idx = 0;
    for (const StepProcess* g : {&g1, &g2, &g3}) {
        ++idx;
        const ConvolutionCheck res =
            convolution_inequality_check(op, *g, p, ladder, 4000, 100 + idx, dt, 1, 2);
        c.check(res.stable, "constant unstable for step process " + std::to_string(idx) +
                                " (spread " + std::to_string(res.ratio_spread) + ")");
    }

    StepProcess doubled;
    doubled.times = {0.0};
    doubled.values = {2.0 * Mat::Ones(2, 1)};
    const ConvolutionCheck base =
        convolution_inequality_check(op, g1, p, ladder, 20000, 901, dt, 1, 2);
    const ConvolutionCheck twice =
        convolution_inequality_check(op, doubled, p, ladder, 20000, 902, dt, 1, 2);
    // Both sides scale by 2^p, so the fitted constants must agree.
    const double ratio = twice.fit_Cp / base.fit_Cp;
    c.check(std::abs(ratio - 1.0) <= 0.05,
            "homogeneity ratio " + std::to_string(ratio) + " off by more than 5%");
    c.finish();
}

void criterion_determinism() {
    Criterion c(8, "byte-identical artifacts across worker counts", 240.0);
    const std::string cfg = config_path("tube2d.cfg");

    auto run = [&](int threads, const std::string& tag) -> fs::path {
        sdi_scenario* handle = nullptr;
        if (sdi_scenario_open(cfg.c_str(), &handle) != SDI_OK) {
            c.check(false, std::string("open failed: ") + sdi_last_error());
            return {};
        }
        sdi_scenario_set_threads(handle, threads);
        const fs::path dir = fresh_dir("det_" + tag);
        const sdi_status status = sdi_run_convergence(handle, dir.string().c_str());
        sdi_scenario_close(handle);
        if (status != SDI_OK)
            c.check(false, std::string("convergence failed: ") + sdi_last_error());
        return dir;
    };

    const fs::path d1 = run(1, "t1");
    const fs::path d4 = run(4, "t4");
    if (!d1.empty() && !d4.empty()) {
        for (const char* name : {"convergence.csv", "report.csv", "report.json"}) {
            const std::string a = slurp(d1 / name);
            const std::string b = slurp(d4 / name);
            c.check(!a.empty() && a == b, std::string(name) + " differs across thread counts");
        }
    }
    c.finish();
}

}  // namespace

int main() {
    criterion_convex();
    criterion_semigroup();
    criterion_osgood();
    criterion_ou();
    criterion_residual_and_gronwall();
    criterion_convolution();
    criterion_determinism();
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
