#include "sdi/coefficients.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "sdi/errors.hpp"
#include "sdi/rng.hpp"

namespace sdi {

MultiMap::MultiMap(EvalFn eval, int domain_dim, int codomain_dim, std::string description)
    : eval_(std::move(eval)),
      domain_dim_(domain_dim),
      codomain_dim_(codomain_dim),
      description_(std::move(description)) {
    if (domain_dim_ < 1 || codomain_dim_ < 1)
        throw Error("multimap: dimensions must be positive");
    if (!eval_) throw Error("multimap: evaluation function required");
}

ConvexBody MultiMap::operator()(double t, const Vec& x) const {
    if (static_cast<int>(x.size()) != domain_dim_)
        throw Error("multimap '" + description_ + "': argument dimension mismatch");
    ConvexBody body = eval_(t, x);
    if (body.dim() != codomain_dim_)
        throw Error("multimap '" + description_ + "': value dimension mismatch");
    return body;
}

OsgoodModulus::OsgoodModulus(EvalFn eval, std::string label)
    : eval_(std::move(eval)), label_(std::move(label)) {
    if (!eval_) throw Error("modulus: evaluation function required");
}

double OsgoodModulus::operator()(double t, double u) const {
    if (!(u >= 0.0)) throw Error("modulus '" + label_ + "': u must be >= 0");
    return eval_(t, u);
}

CoefficientHypotheses::CoefficientHypotheses(double eta_, OsgoodModulus modulus_, double p_)
    : eta(eta_), modulus(std::move(modulus_)), p(p_) {
    if (!(eta > 0.0)) throw Error("hypotheses: eta must be > 0");
    if (!(p > 2.0)) throw Error("hypotheses: p must be > 2");
}

// ---------------------------------------------------------------------------
// Hypothesis checks
// ---------------------------------------------------------------------------

namespace {

// Hausd({0}, K) equals the farthest-point norm, exact on the canonical form.
double farthest_point_norm(const ConvexBody& K) {
    const RoundedPolytope rp = canonical_form(K);
    double m = 0.0;
    for (const Vec& v : rp.vertices) m = std::max(m, v.norm());
    return m + rp.radius;
}

}  // namespace

GrowthReport check_growth(const MultiMap& F, const CoefficientHypotheses& hyp,
                          std::span<const Sample> samples) {
    if (samples.empty()) throw Error("check_growth: sample list must be nonempty");
    GrowthReport report;
    for (const Sample& s : samples) {
        const double lhs = farthest_point_norm(F(s.t, s.x));
        const double rhs = hyp.eta * (1.0 + s.x.norm());
        const double ratio = lhs / rhs;
        if (ratio > report.worst_ratio) {
            report.worst_ratio = ratio;
            report.worst = s;
        }
        if (ratio > 1.0) ++report.violations;
    }
    report.pass = report.violations == 0;
    return report;
}

ModulusReport check_modulus(const MultiMap& F, const CoefficientHypotheses& hyp,
                            std::span<const SamplePair> pairs, double hausdorff_tol) {
    if (pairs.empty()) throw Error("check_modulus: pair list must be nonempty");
    ModulusReport report;
    report.hausdorff_tol = hausdorff_tol;
    for (const SamplePair& pr : pairs) {
        const double hd = hausdorff_distance(F(pr.t, pr.x), F(pr.t, pr.y), hausdorff_tol);
        const double lhs = std::pow(hd, hyp.p);
        const double rhs = hyp.modulus(pr.t, std::pow((pr.x - pr.y).norm(), hyp.p));
        double ratio;
        if (rhs > 0.0) {
            ratio = lhs / rhs;
        } else {
            // Both sides vanish for x = y up to the distance tolerance.
            ratio = lhs <= std::pow(2.0 * hausdorff_tol, hyp.p)
                        ? 0.0
                        : std::numeric_limits<double>::infinity();
        }
        if (ratio > report.worst_ratio) {
            report.worst_ratio = ratio;
            report.worst = pr;
        }
        if (ratio > 1.0) ++report.violations;
    }
    report.pass = report.violations == 0;
    return report;
}

ModulusShapeReport check_modulus_shape(const OsgoodModulus& L, double T, int t_grid, int u_grid,
                                       double u_max) {
    if (t_grid < 1 || u_grid < 3 || !(u_max > 0.0) || !(T >= 0.0))
        throw Error("check_modulus_shape: invalid grid");
    ModulusShapeReport report;
    for (int i = 0; i <= t_grid; ++i) {
        const double t = T * static_cast<double>(i) / t_grid;
        if (L(t, 0.0) != 0.0) report.zero_at_zero = false;
        std::vector<double> vals(static_cast<std::size_t>(u_grid) + 1);
        for (int j = 0; j <= u_grid; ++j) {
            const double u = u_max * static_cast<double>(j) / u_grid;
            vals[static_cast<std::size_t>(j)] = L(t, u);
            if (!std::isfinite(vals[static_cast<std::size_t>(j)])) report.finite = false;
        }
        for (int j = 0; j < u_grid; ++j)
            if (vals[j + 1] < vals[j] - 1e-12 * std::abs(vals[j])) report.nondecreasing = false;
        for (int j = 1; j < u_grid; ++j) {
            const double defect = 2.0 * vals[j] - vals[j - 1] - vals[j + 1];
            const double scale = std::max({std::abs(vals[j - 1]), std::abs(vals[j + 1]), 1e-30});
            if (defect > 1e-9 * scale) {
                report.convex = false;
                report.worst_convexity_defect = std::max(report.worst_convexity_defect, defect);
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Osgood iteration
// ---------------------------------------------------------------------------

OsgoodResult osgood_iterate(const OsgoodModulus& L, double k, double T, double R0, int grid,
                            int iters) {
    if (!(k > 0.0)) throw Error("osgood_iterate: k must be > 0");
    if (!(T > 0.0)) throw Error("osgood_iterate: T must be > 0");
    if (!(R0 > 0.0)) throw Error("osgood_iterate: R0 must be > 0");
    if (grid < 2 || iters < 1) throw Error("osgood_iterate: grid >= 2 and iters >= 1 required");

    const std::size_t n = static_cast<std::size_t>(grid) + 1;
    const double dt = T / grid;
    std::vector<double> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i] = T * static_cast<double>(i) / grid;

    auto picard = [&](const std::vector<double>& R) {
        std::vector<double> next(n, 0.0);
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) {
            f[i] = L(ts[i], R[i]);
            if (!std::isfinite(f[i]))
                throw Error("osgood_iterate: modulus '" + L.label() + "' returned a non-finite value");
        }
        double acc = 0.0;
        next[0] = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            acc += 0.5 * dt * (f[i - 1] + f[i]);
            next[i] = k * acc;
        }
        return next;
    };

    OsgoodResult res;

    // Establish R_1 <= R_0 on the grid, inflating R0 while doubling actually
    // improves the dominance ratio (it does for sublinear moduli; for linear
    // and faster ones the ratio is scale-invariant or worse, so keep R0).
    auto dominance_ratio = [&](double r0) {
        const std::vector<double> first = picard(std::vector<double>(n, r0));
        return *std::max_element(first.begin(), first.end()) / r0;
    };
    double working = R0;
    double ratio = dominance_ratio(working);
    for (int attempt = 0; attempt < 60 && ratio > 1.0; ++attempt) {
        const double next = 2.0 * working;
        const double next_ratio = dominance_ratio(next);
        if (next_ratio >= ratio * (1.0 - 1e-12)) break;
        working = next;
        ratio = next_ratio;
        res.inflated = true;
    }
    res.working_R0 = working;
    res.dominance = ratio <= 1.0;
    std::vector<double> R(n, res.working_R0);

    for (int m = 0; m < iters; ++m) {
        std::vector<double> next = picard(R);
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - R[i]));
        if (res.dominance) {
            // Once dominated, the iteration is monotone by induction.
            for (std::size_t i = 0; i < n; ++i)
                if (next[i] > R[i] + 1e-9 * (1.0 + R[i]))
                    throw Error("osgood_iterate: dominated iterates failed to decrease");
        }
        R = std::move(next);
        res.iterations_run = m + 1;
        res.last_change = change;
        const double sup = *std::max_element(R.begin(), R.end());
        if (sup > 0.0 && change / sup < 1e-6) {
            res.stabilized = true;
            break;
        }
        if (sup == 0.0) break;
    }

    res.limit_sup = *std::max_element(R.begin(), R.end());
    if (res.limit_sup <= 1e-8 * res.working_R0) {
        res.verdict = OsgoodVerdict::osgood_pass;
    } else if (res.stabilized && res.limit_sup > 1e-4 * res.working_R0) {
        res.verdict = OsgoodVerdict::osgood_fail;
    } else {
        res.verdict = OsgoodVerdict::inconclusive;
    }
    return res;
}

const char* to_string(OsgoodVerdict v) {
    switch (v) {
        case OsgoodVerdict::osgood_pass: return "osgood_pass";
        case OsgoodVerdict::osgood_fail: return "osgood_fail";
        default: return "inconclusive";
    }
}

// ---------------------------------------------------------------------------
// Selection rules
// ---------------------------------------------------------------------------

namespace {

uint64_t fnv1a_bytes(const void* data, std::size_t size, uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t hash_state(double t, const Vec& x) {
    uint64_t h = fnv1a_bytes(&t, sizeof(t));
    for (Eigen::Index i = 0; i < x.size(); ++i) h = fnv1a_bytes(&x[i], sizeof(double), h);
    return h;
}

}  // namespace

Selector caratheodory_selector(const MultiMap& F, const SelectionRule& rule,
                               std::span<const Sample> certification_samples, double tol) {
    Selector fn;
    if (const auto* st = std::get_if<SteinerRule>(&rule)) {
        const QuadratureSpec quad = st->quad;
        fn = [F, quad](double t, const Vec& x) { return steiner_point(F(t, x), quad); };
    } else if (const auto* sup = std::get_if<SupportRule>(&rule)) {
        if (sup->u.dim() != F.codomain_dim())
            throw Error("caratheodory_selector: support direction dimension mismatch");
        const Direction u = sup->u;
        fn = [F, u](double t, const Vec& x) { return support_point(F(t, x), u); };
    } else {
        const uint64_t seed = std::get<VertexRandomRule>(rule).seed;
        fn = [F, seed](double t, const Vec& x) {
            const RoundedPolytope rp = canonical_form(F(t, x));
            const uint64_t h = hash_state(t, x);
            const uint64_t pick = counter_u64(seed, h, h >> 32, 0, philox::kVertexPick);
            return rp.vertices[pick % rp.vertices.size()];
        };
    }

    double worst = 0.0;
    for (const Sample& s : certification_samples) {
        const Vec v = fn(s.t, s.x);
        const DistanceResult dr = distance_to_point(F(s.t, s.x), v, tol);
        worst = std::max(worst, dr.dist);
    }
    if (worst > tol)
        throw MembershipError("caratheodory_selector: certification failed", worst);
    return fn;
}

// ---------------------------------------------------------------------------
// Built-in families
// ---------------------------------------------------------------------------

MultiMap affine_tube(Vec center, Mat B, ConvexBody body0,
                     std::function<double(double)> radius_fn, std::string description) {
    if (B.rows() != center.size() || B.rows() != body0.dim())
        throw Error("affine_tube: inconsistent dimensions");
    if (!radius_fn) throw Error("affine_tube: radius function required");
    const int dom = static_cast<int>(B.cols());
    const int cod = static_cast<int>(B.rows());
    auto eval = [center, B, body0, radius_fn](double t, const Vec& x) {
        const double r = radius_fn(t);
        if (!(r >= 0.0)) throw Error("affine_tube: radius function must be >= 0");
        return ConvexBody::translated(center + B * x, ConvexBody::scaled(r, body0));
    };
    return MultiMap(std::move(eval), dom, cod, std::move(description));
}

MultiMap singleton_matrix(std::function<Mat(double)> matrix_fn, int domain_dim, int rows,
                          int cols, std::string description) {
    if (!matrix_fn) throw Error("singleton_matrix: matrix function required");
    auto eval = [matrix_fn, rows, cols](double t, const Vec&) {
        const Mat m = matrix_fn(t);
        if (m.rows() != rows || m.cols() != cols)
            throw Error("singleton_matrix: matrix function dimension mismatch");
        return ConvexBody::point(flatten(m));
    };
    return MultiMap(std::move(eval), domain_dim, rows * cols, std::move(description));
}

MultiMap osgood_scalar_drift(double C, double p) {
    if (!(C > 0.0) || !(p > 2.0)) throw Error("osgood_scalar_drift: need C > 0 and p > 2");
    const double c0 = 0.5 * std::pow(C, 1.0 / p);
    auto h = [p](double r) {
        if (r <= 0.0) return 0.0;
        return r * std::pow(1.0 - std::log(r), 1.0 / p);
    };
    auto eval = [c0, h](double, const Vec& x) {
        const double r = std::min(std::abs(x[0]), 1.0);
        const double sign = x[0] < 0.0 ? -1.0 : 1.0;
        Vec v(1);
        v << c0 * sign * h(r);
        return ConvexBody::point(v);
    };
    return MultiMap(std::move(eval), 1, 1, "osgood_scalar_drift(C=" + std::to_string(C) + ")");
}

OsgoodModulus linear_modulus(double C) {
    if (!(C >= 0.0)) throw Error("linear_modulus: C must be >= 0");
    return OsgoodModulus([C](double, double u) { return C * u; },
                         "linear(C=" + std::to_string(C) + ")");
}

OsgoodModulus loglinear_modulus(double C) {
    if (!(C >= 0.0)) throw Error("loglinear_modulus: C must be >= 0");
    return OsgoodModulus(
        [C](double, double u) {
            if (u <= 0.0) return 0.0;
            if (u >= 1.0) return C * u;
            return C * u * (1.0 - std::log(u));
        },
        "loglinear(C=" + std::to_string(C) + ")");
}

OsgoodModulus sqrt_modulus(double C) {
    if (!(C >= 0.0)) throw Error("sqrt_modulus: C must be >= 0");
    return OsgoodModulus([C](double, double u) { return C * std::sqrt(u); },
                         "sqrt(C=" + std::to_string(C) + ")");
}

}  // namespace sdi
