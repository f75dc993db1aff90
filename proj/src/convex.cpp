#include "sdi/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sdi/errors.hpp"
#include "sdi/rng.hpp"

namespace sdi {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void require_finite(const Vec& v, const char* what) {
    if (!v.allFinite()) throw Error(std::string(what) + ": non-finite entries");
}

int checked_dim(const Vec& v, const char* what) {
    if (v.size() == 0) throw Error(std::string(what) + ": empty vector");
    require_finite(v, what);
    return static_cast<int>(v.size());
}

}  // namespace

ConvexBody::ConvexBody(Node node, int dim)
    : node_(std::make_shared<const Node>(std::move(node))), dim_(dim) {}

ConvexBody ConvexBody::point(Vec c) {
    const int d = checked_dim(c, "point");
    return ConvexBody(Point{std::move(c)}, d);
}

ConvexBody ConvexBody::ball(Vec center, double radius) {
    const int d = checked_dim(center, "ball");
    if (!(radius >= 0.0) || !std::isfinite(radius))
        throw Error("ball: radius must be finite and >= 0");
    return ConvexBody(Ball{std::move(center), radius}, d);
}

ConvexBody ConvexBody::hull(std::vector<Vec> vertices) {
    if (vertices.empty()) throw Error("hull: vertex list must be nonempty");
    const int d = checked_dim(vertices.front(), "hull");
    for (const Vec& v : vertices)
        if (static_cast<int>(v.size()) != d || !v.allFinite())
            throw Error("hull: vertices must share one finite dimension");
    return ConvexBody(Hull{std::move(vertices)}, d);
}

ConvexBody ConvexBody::minkowski_sum(ConvexBody left, ConvexBody right) {
    if (left.dim() != right.dim()) throw Error("minkowski_sum: dimension mismatch");
    const int d = left.dim();
    return ConvexBody(MinkowskiSum{std::make_shared<const ConvexBody>(std::move(left)),
                                   std::make_shared<const ConvexBody>(std::move(right))},
                      d);
}

ConvexBody ConvexBody::scaled(double factor, ConvexBody body) {
    if (!(factor >= 0.0) || !std::isfinite(factor))
        throw Error("scaled: factor must be finite and >= 0");
    const int d = body.dim();
    return ConvexBody(Scaled{factor, std::make_shared<const ConvexBody>(std::move(body))}, d);
}

ConvexBody ConvexBody::translated(Vec offset, ConvexBody body) {
    if (static_cast<int>(offset.size()) != body.dim())
        throw Error("translated: dimension mismatch");
    require_finite(offset, "translated");
    const int d = body.dim();
    return ConvexBody(Translated{std::move(offset), std::make_shared<const ConvexBody>(std::move(body))},
                      d);
}

Direction::Direction(Vec u) : u_(std::move(u)) {
    require_finite(u_, "direction");
    const double n = u_.norm();
    if (std::abs(n - 1.0) > 1e-12) throw Error("direction: vector is not unit length");
}

Direction Direction::normalized(const Vec& v) {
    require_finite(v, "direction");
    const double n = v.norm();
    if (n == 0.0) throw Error("direction: cannot normalize the zero vector");
    return Direction(Vec(v / n));
}

// ---------------------------------------------------------------------------
// Canonical rounded-polytope form
// ---------------------------------------------------------------------------

namespace {

void dedupe_vertices(std::vector<Vec>& verts) {
    std::sort(verts.begin(), verts.end(), [](const Vec& a, const Vec& b) { return lex_less(a, b); });
    verts.erase(std::unique(verts.begin(), verts.end(),
                            [](const Vec& a, const Vec& b) { return a == b; }),
                verts.end());
}

RoundedPolytope canonical_impl(const ConvexBody& body, std::size_t cap) {
    const auto& n = body.node();
    if (const auto* p = std::get_if<ConvexBody::Point>(&n)) {
        return RoundedPolytope{{p->c}, 0.0};
    }
    if (const auto* b = std::get_if<ConvexBody::Ball>(&n)) {
        return RoundedPolytope{{b->center}, b->radius};
    }
    if (const auto* h = std::get_if<ConvexBody::Hull>(&n)) {
        RoundedPolytope out{h->vertices, 0.0};
        dedupe_vertices(out.vertices);
        return out;
    }
    if (const auto* m = std::get_if<ConvexBody::MinkowskiSum>(&n)) {
        RoundedPolytope l = canonical_impl(*m->left, cap);
        RoundedPolytope r = canonical_impl(*m->right, cap);
        if (l.vertices.size() * r.vertices.size() > cap)
            throw Error("canonical_form: Minkowski sum exceeds the vertex cap (" +
                        std::to_string(cap) + ")");
        RoundedPolytope out;
        out.radius = l.radius + r.radius;
        out.vertices.reserve(l.vertices.size() * r.vertices.size());
        for (const Vec& a : l.vertices)
            for (const Vec& b : r.vertices) out.vertices.push_back(a + b);
        dedupe_vertices(out.vertices);
        return out;
    }
    if (const auto* s = std::get_if<ConvexBody::Scaled>(&n)) {
        RoundedPolytope out = canonical_impl(*s->body, cap);
        for (Vec& v : out.vertices) v *= s->factor;
        out.radius *= s->factor;
        dedupe_vertices(out.vertices);
        return out;
    }
    const auto& t = std::get<ConvexBody::Translated>(n);
    RoundedPolytope out = canonical_impl(*t.body, cap);
    for (Vec& v : out.vertices) v += t.offset;
    return out;
}

}  // namespace

RoundedPolytope canonical_form(const ConvexBody& body, std::size_t vertex_cap) {
    return canonical_impl(body, vertex_cap);
}

// ---------------------------------------------------------------------------
// Support function and support points
// ---------------------------------------------------------------------------

namespace {

double support_value_rec(const ConvexBody& body, const Vec& u) {
    const auto& n = body.node();
    if (const auto* p = std::get_if<ConvexBody::Point>(&n)) return p->c.dot(u);
    if (const auto* b = std::get_if<ConvexBody::Ball>(&n))
        return b->center.dot(u) + b->radius * u.norm();
    if (const auto* h = std::get_if<ConvexBody::Hull>(&n)) {
        double best = -std::numeric_limits<double>::infinity();
        for (const Vec& v : h->vertices) best = std::max(best, v.dot(u));
        return best;
    }
    if (const auto* m = std::get_if<ConvexBody::MinkowskiSum>(&n))
        return support_value_rec(*m->left, u) + support_value_rec(*m->right, u);
    if (const auto* s = std::get_if<ConvexBody::Scaled>(&n))
        return s->factor * support_value_rec(*s->body, u);
    const auto& t = std::get<ConvexBody::Translated>(n);
    return t.offset.dot(u) + support_value_rec(*t.body, u);
}

Vec support_point_rec(const ConvexBody& body, const Vec& u) {
    const auto& n = body.node();
    if (const auto* p = std::get_if<ConvexBody::Point>(&n)) return p->c;
    if (const auto* b = std::get_if<ConvexBody::Ball>(&n)) {
        const double nu = u.norm();
        return b->center + (b->radius / nu) * u;
    }
    if (const auto* h = std::get_if<ConvexBody::Hull>(&n)) {
        const Vec* best = &h->vertices.front();
        double best_val = best->dot(u);
        for (const Vec& v : h->vertices) {
            const double val = v.dot(u);
            if (val > best_val || (val == best_val && lex_less(v, *best))) {
                best = &v;
                best_val = val;
            }
        }
        return *best;
    }
    if (const auto* m = std::get_if<ConvexBody::MinkowskiSum>(&n))
        return support_point_rec(*m->left, u) + support_point_rec(*m->right, u);
    if (const auto* s = std::get_if<ConvexBody::Scaled>(&n))
        return s->factor * support_point_rec(*s->body, u);
    const auto& t = std::get<ConvexBody::Translated>(n);
    return t.offset + support_point_rec(*t.body, u);
}

void require_dim_match(const ConvexBody& body, int dim, const char* what) {
    if (body.dim() != dim) throw Error(std::string(what) + ": dimension mismatch");
}

}  // namespace

double support_value(const ConvexBody& body, const Direction& u) {
    require_dim_match(body, u.dim(), "support_value");
    return support_value_rec(body, u.u());
}

Vec support_point(const ConvexBody& body, const Direction& u) {
    require_dim_match(body, u.dim(), "support_point");
    return support_point_rec(body, u.u());
}

// ---------------------------------------------------------------------------
// Distance to a point: Frank-Wolfe with away steps on the canonical polytope
// ---------------------------------------------------------------------------

namespace {

// Linear maximization over a vertex list with lexicographic tie-breaking.
std::size_t vertex_argmax(const std::vector<Vec>& verts, const Vec& u) {
    std::size_t best = 0;
    double best_val = verts[0].dot(u);
    for (std::size_t i = 1; i < verts.size(); ++i) {
        const double val = verts[i].dot(u);
        if (val > best_val || (val == best_val && lex_less(verts[i], verts[best]))) {
            best = i;
            best_val = val;
        }
    }
    return best;
}

struct PolytopeDistance {
    double dist;
    Vec witness;
    double gap;
    int iterations;
};

PolytopeDistance polytope_distance(const std::vector<Vec>& verts, const Vec& x, double tol,
                                   std::size_t max_iter) {
    if (verts.size() == 1)
        return {(x - verts[0]).norm(), verts[0], 0.0, 0};

    const double gap_target = 0.5 * tol * tol;
    std::vector<std::size_t> atoms;
    std::vector<double> weights;

    // Start from the vertex best aligned with x (relative to the vertex mean).
    Vec center = Vec::Zero(x.size());
    for (const Vec& v : verts) center += v;
    center /= static_cast<double>(verts.size());
    Vec u0 = x - center;
    if (u0.norm() == 0.0) u0 = Vec::Unit(x.size(), 0);
    atoms.push_back(vertex_argmax(verts, u0));
    weights.push_back(1.0);
    Vec y = verts[atoms[0]];

    auto rebuild = [&]() {
        std::size_t keep = 0;
        double wsum = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (weights[i] > 1e-14) {
                atoms[keep] = atoms[i];
                weights[keep] = weights[i];
                wsum += weights[i];
                ++keep;
            }
        }
        if (keep == 0) {  // keep the heaviest atom as a guard
            keep = 1;
            weights[0] = 1.0;
            wsum = 1.0;
        }
        atoms.resize(keep);
        weights.resize(keep);
        y.setZero();
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            weights[i] /= wsum;
            y += weights[i] * verts[atoms[i]];
        }
    };

    // Wolfe min-norm-point correction: project x onto the convex hull of the
    // active atoms exactly (affine least squares plus line moves toward the
    // simplex), so each oracle call is followed by a finite exact solve.
    auto corrective = [&]() {
        for (int guard = 0; guard < 128; ++guard) {
            const Eigen::Index m = static_cast<Eigen::Index>(atoms.size());
            Mat K(m + 1, m + 1);
            Vec rhs(m + 1);
            for (Eigen::Index i = 0; i < m; ++i) {
                for (Eigen::Index j = 0; j < m; ++j)
                    K(i, j) = verts[atoms[static_cast<std::size_t>(i)]].dot(
                        verts[atoms[static_cast<std::size_t>(j)]]);
                K(i, m) = 1.0;
                K(m, i) = 1.0;
                rhs(i) = verts[atoms[static_cast<std::size_t>(i)]].dot(x);
            }
            K(m, m) = 0.0;
            rhs(m) = 1.0;
            const Vec sol = K.fullPivLu().solve(rhs);
            const Vec alpha = sol.head(m);

            if ((alpha.array() >= -1e-12).all()) {
                for (Eigen::Index i = 0; i < m; ++i)
                    weights[static_cast<std::size_t>(i)] = std::max(alpha[i], 0.0);
                rebuild();
                return;
            }
            // Move from the current weights toward alpha until a coordinate
            // hits zero, then drop it and re-solve.
            double theta = 1.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                const double w = weights[static_cast<std::size_t>(i)];
                if (alpha[i] < w) theta = std::min(theta, w / (w - alpha[i]));
            }
            for (Eigen::Index i = 0; i < m; ++i) {
                auto& w = weights[static_cast<std::size_t>(i)];
                w += theta * (alpha[i] - w);
                if (w < 1e-14) w = 0.0;
            }
            rebuild();
            if (atoms.size() == static_cast<std::size_t>(m)) return;  // no progress possible
        }
    };

    double gap = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    for (; it < max_iter; ++it) {
        const Vec g = y - x;
        const std::size_t s = vertex_argmax(verts, -g);
        gap = g.dot(y - verts[s]);
        if (gap <= gap_target) break;

        bool fresh = true;
        for (std::size_t a : atoms)
            if (a == s) fresh = false;
        if (fresh) {
            atoms.push_back(s);
            weights.push_back(0.0);
        }
        corrective();
        if (!fresh) break;  // the oracle has nothing new: FP floor reached
    }

    if (gap > gap_target)
        throw ConvergenceError("distance_to_point: duality gap target not reached within " +
                                   std::to_string(max_iter) + " iterations",
                               gap);

    return {(x - y).norm(), y, gap, static_cast<int>(it)};
}

}  // namespace

DistanceResult distance_to_point(const ConvexBody& body, const Vec& x, double tol,
                                 std::size_t max_iter) {
    if (static_cast<int>(x.size()) != body.dim())
        throw Error("distance_to_point: dimension mismatch");
    require_finite(x, "distance_to_point");
    if (!(tol > 0.0)) throw Error("distance_to_point: tol must be > 0");
    if (max_iter == 0) {
        const double budget = 10.0 * static_cast<double>(body.dim()) / std::sqrt(tol);
        max_iter = static_cast<std::size_t>(std::clamp(budget, 1000.0, 200000.0));
    }

    const RoundedPolytope rp = canonical_form(body);
    const PolytopeDistance pd = polytope_distance(rp.vertices, x, tol, max_iter);
    if (pd.dist <= rp.radius) {
        // x itself lies in conv(V) + radius-ball.
        return DistanceResult{0.0, x, pd.gap, pd.iterations};
    }
    const Vec dir = (x - pd.witness) / pd.dist;
    return DistanceResult{pd.dist - rp.radius, Vec(pd.witness + rp.radius * dir), pd.gap,
                          pd.iterations};
}

// ---------------------------------------------------------------------------
// Hausdorff distance
// ---------------------------------------------------------------------------

namespace {

// Planar convex hull (monotone chain), counterclockwise, collinear points
// removed. One or two points pass through unchanged.
std::vector<Vec> hull2d(std::vector<Vec> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return lex_less(a, b); });
    pts.erase(std::unique(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return a == b; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n <= 2) return pts;
    auto cross = [](const Vec& o, const Vec& a, const Vec& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<Vec> h(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
        h[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

double one_sided_polytope(const std::vector<Vec>& from, const std::vector<Vec>& to_verts,
                          double tol) {
    double worst = 0.0;
    for (const Vec& v : from) {
        const PolytopeDistance pd = polytope_distance(
            to_verts, v, tol, static_cast<std::size_t>(std::clamp(10.0 * v.size() / std::sqrt(tol),
                                                                  1000.0, 200000.0)));
        worst = std::max(worst, pd.dist);
    }
    return worst;
}

// Outward normal angles of the edges of a CCW planar polygon; for a segment,
// both side normals. These are the breakpoints of the support-function fan.
std::vector<double> fan_breakpoints(const std::vector<Vec>& hull) {
    std::vector<double> angles;
    const std::size_t m = hull.size();
    if (m < 2) return angles;
    if (m == 2) {
        const double e = std::atan2(hull[1][1] - hull[0][1], hull[1][0] - hull[0][0]);
        angles.push_back(e - kPi / 2.0);
        angles.push_back(e + kPi / 2.0);
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            const Vec& a = hull[i];
            const Vec& b = hull[(i + 1) % m];
            angles.push_back(std::atan2(b[1] - a[1], b[0] - a[0]) - kPi / 2.0);
        }
    }
    for (double& a : angles) {
        a = std::fmod(a, 2.0 * kPi);
        if (a < 0.0) a += 2.0 * kPi;
    }
    std::sort(angles.begin(), angles.end());
    angles.erase(std::unique(angles.begin(), angles.end()), angles.end());
    return angles;
}

// sup over the unit circle of |h_A(u) - h_B(u)| for planar rounded polytopes,
// resolved arc by arc: between fan breakpoints the difference is a single
// sinusoid plus the radius offset, so each arc maximum is analytic.
double planar_support_gap(const RoundedPolytope& A, const RoundedPolytope& B) {
    const std::vector<Vec> ha = hull2d(A.vertices);
    const std::vector<Vec> hb = hull2d(B.vertices);
    std::vector<double> bps = fan_breakpoints(ha);
    {
        std::vector<double> more = fan_breakpoints(hb);
        bps.insert(bps.end(), more.begin(), more.end());
    }
    if (bps.empty()) bps.push_back(0.0);
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());

    const double dr = A.radius - B.radius;
    double best = 0.0;
    auto unit = [](double th) {
        Vec u(2);
        u << std::cos(th), std::sin(th);
        return u;
    };
    const std::size_t nb = bps.size();
    for (std::size_t i = 0; i < nb; ++i) {
        const double a = bps[i];
        const double b = (i + 1 < nb) ? bps[i + 1] : bps[0] + 2.0 * kPi;
        const double mid = 0.5 * (a + b);
        const Vec va = ha[vertex_argmax(ha, unit(mid))];
        const Vec vb = hb[vertex_argmax(hb, unit(mid))];
        const Vec w = va - vb;
        const double amp = w.norm();
        const double psi = std::atan2(w[1], w[0]);
        std::vector<double> cands = {a, b};
        for (double peak : {psi, psi + kPi}) {
            double p = std::fmod(peak - a, 2.0 * kPi);
            if (p < 0.0) p += 2.0 * kPi;
            if (a + p <= b) cands.push_back(a + p);
        }
        for (double th : cands) {
            const double phi = amp * std::cos(th - psi) + dr;
            best = std::max(best, std::abs(phi));
        }
    }
    return best;
}

std::string describe(const RoundedPolytope& rp) {
    return "{" + std::to_string(rp.vertices.size()) + " vertices, radius " +
           std::to_string(rp.radius) + "}";
}

// Certified direction-net bound on sup |h_A - h_B| for S^2. Returns the net
// maximum plus half the Lipschitz slack, so the result is within tol of the
// true value, or throws when the required net exceeds the node cap.
double net_support_gap_3d(const RoundedPolytope& A, const RoundedPolytope& B, double tol) {
    Vec center = Vec::Zero(3);
    for (const Vec& v : A.vertices) center += v;
    center /= static_cast<double>(A.vertices.size());
    Vec cb = Vec::Zero(3);
    for (const Vec& v : B.vertices) cb += v;
    cb /= static_cast<double>(B.vertices.size());
    center = 0.5 * (center + cb);

    double lip = 0.0;
    for (const Vec& v : A.vertices) lip = std::max(lip, (v - center).norm());
    double lb = 0.0;
    for (const Vec& v : B.vertices) lb = std::max(lb, (v - center).norm());
    lip += lb;
    if (lip == 0.0) return std::abs(A.radius - B.radius);

    const double alpha = 2.0 * tol / lip;  // required covering radius (chord)
    const double band = alpha / 2.0;
    const std::size_t node_cap = 6'000'000;
    const double ntheta_d = std::ceil(kPi / band);
    if (ntheta_d > 16384.0)
        throw Error("hausdorff_distance: tolerance " + std::to_string(tol) +
                    " not achievable for rounded-polytope pair " + describe(A) + " vs " +
                    describe(B) + " in dimension 3 (direction net exceeds cap)");
    const std::size_t ntheta = static_cast<std::size_t>(ntheta_d);

    const double dr = A.radius - B.radius;
    double best = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < ntheta; ++i) {
        const double theta = (static_cast<double>(i) + 0.5) * kPi / static_cast<double>(ntheta);
        const double s = std::sin(theta), c = std::cos(theta);
        const std::size_t nphi =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2.0 * kPi * s / band)));
        used += nphi;
        if (used > node_cap)
            throw Error("hausdorff_distance: tolerance " + std::to_string(tol) +
                        " not achievable for rounded-polytope pair " + describe(A) + " vs " +
                        describe(B) + " in dimension 3 (direction net exceeds cap)");
        for (std::size_t j = 0; j < nphi; ++j) {
            const double phi = (static_cast<double>(j) + 0.5) * 2.0 * kPi / static_cast<double>(nphi);
            Vec u(3);
            u << s * std::cos(phi), s * std::sin(phi), c;
            double haa = -std::numeric_limits<double>::infinity();
            for (const Vec& v : A.vertices) haa = std::max(haa, v.dot(u));
            double hbb = -std::numeric_limits<double>::infinity();
            for (const Vec& v : B.vertices) hbb = std::max(hbb, v.dot(u));
            best = std::max(best, std::abs(haa - hbb + dr));
        }
    }
    return best + 0.5 * lip * alpha;
}

}  // namespace

double hausdorff_distance(const ConvexBody& a, const ConvexBody& b, double tol) {
    if (a.dim() != b.dim()) throw Error("hausdorff_distance: dimension mismatch");
    if (!(tol > 0.0)) throw Error("hausdorff_distance: tol must be > 0");
    const int d = a.dim();
    const RoundedPolytope A = canonical_form(a);
    const RoundedPolytope B = canonical_form(b);

    if (d == 1) {
        double lo_a = std::numeric_limits<double>::infinity(), hi_a = -lo_a;
        for (const Vec& v : A.vertices) {
            lo_a = std::min(lo_a, v[0]);
            hi_a = std::max(hi_a, v[0]);
        }
        double lo_b = std::numeric_limits<double>::infinity(), hi_b = -lo_b;
        for (const Vec& v : B.vertices) {
            lo_b = std::min(lo_b, v[0]);
            hi_b = std::max(hi_b, v[0]);
        }
        return std::max(std::abs((lo_a - A.radius) - (lo_b - B.radius)),
                        std::abs((hi_a + A.radius) - (hi_b + B.radius)));
    }

    if (A.vertices.size() == 1 && B.vertices.size() == 1) {
        return (A.vertices[0] - B.vertices[0]).norm() + std::abs(A.radius - B.radius);
    }

    if (A.radius == 0.0 && B.radius == 0.0) {
        const double e_ab = one_sided_polytope(A.vertices, B.vertices, tol);
        const double e_ba = one_sided_polytope(B.vertices, A.vertices, tol);
        return std::max(e_ab, e_ba);
    }

    if (d == 2) return planar_support_gap(A, B);
    if (d == 3) return net_support_gap_3d(A, B, tol);

    throw Error("hausdorff_distance: no certified method for rounded-polytope pair " + describe(A) +
                " vs " + describe(B) + " in dimension " + std::to_string(d));
}

// ---------------------------------------------------------------------------
// Steiner point
// ---------------------------------------------------------------------------

std::vector<Vec> sphere_directions(int dim, int nodes) {
    if (dim < 1 || nodes < 1) throw Error("sphere_directions: invalid arguments");
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(nodes));
    if (dim == 1) {
        Vec plus(1), minus(1);
        plus << 1.0;
        minus << -1.0;
        out = {plus, minus};
        return out;
    }
    if (dim == 2) {
        for (int i = 0; i < nodes; ++i) {
            const double th = 2.0 * kPi * (static_cast<double>(i) + 0.5) / nodes;
            Vec u(2);
            u << std::cos(th), std::sin(th);
            out.push_back(std::move(u));
        }
        return out;
    }
    if (dim == 3) {
        // Fibonacci lattice.
        const double ga = kPi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < nodes; ++i) {
            const double z = 1.0 - (2.0 * i + 1.0) / nodes;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = ga * i;
            Vec u(3);
            u << r * std::cos(phi), r * std::sin(phi), z;
            out.push_back(std::move(u));
        }
        return out;
    }
    // dim >= 4: deterministic counter-based Gaussian directions, antithetic.
    const uint64_t key = 0x5D15D1EA11CE5ULL;
    const int half = (nodes + 1) / 2;
    for (int i = 0; i < half; ++i) {
        Vec z(dim);
        for (int j = 0; j < dim; ++j)
            z[j] = counter_normal(key, static_cast<uint64_t>(i), 0, static_cast<uint32_t>(j),
                                  philox::kDirections);
        const double n = z.norm();
        if (n == 0.0) {
            z = Vec::Unit(dim, 0);
        } else {
            z /= n;
        }
        out.push_back(z);
        out.push_back(Vec(-z));
    }
    // Odd node counts round up to keep the net antithetic.
    return out;
}

namespace {

// Exterior-angle weighted vertex average over a planar hull.
Vec steiner_polygon(const std::vector<Vec>& verts) {
    const std::vector<Vec> h = hull2d(verts);
    if (h.size() == 1) return h[0];
    if (h.size() == 2) return Vec(0.5 * (h[0] + h[1]));
    const std::size_t m = h.size();
    Vec s = Vec::Zero(2);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const Vec& prev = h[(i + m - 1) % m];
        const Vec& cur = h[i];
        const Vec& next = h[(i + 1) % m];
        const Vec e_in = cur - prev;
        const Vec e_out = next - cur;
        const double cross = e_in[0] * e_out[1] - e_in[1] * e_out[0];
        const double dot = e_in.dot(e_out);
        const double ext = std::atan2(cross, dot);
        s += ext * cur;
        total += ext;
    }
    return Vec(s / total);
}

Vec steiner_hull(const std::vector<Vec>& vertices, int dim, const QuadratureSpec& quad) {
    std::vector<Vec> verts = vertices;
    dedupe_vertices(verts);
    if (verts.size() == 1) return verts[0];
    if (verts.size() == 2) return Vec(0.5 * (verts[0] + verts[1]));
    if (dim == 1) {
        double lo = verts[0][0], hi = verts[0][0];
        for (const Vec& v : verts) {
            lo = std::min(lo, v[0]);
            hi = std::max(hi, v[0]);
        }
        Vec s(1);
        s << 0.5 * (lo + hi);
        return s;
    }
    if (dim == 2) return steiner_polygon(verts);

    // Affine rank: hulls lying on a line or plane reduce exactly.
    Vec centroid = Vec::Zero(dim);
    for (const Vec& v : verts) centroid += v;
    centroid /= static_cast<double>(verts.size());
    Mat centered(static_cast<Eigen::Index>(verts.size()), dim);
    for (std::size_t i = 0; i < verts.size(); ++i)
        centered.row(static_cast<Eigen::Index>(i)) = (verts[i] - centroid).transpose();
    Eigen::JacobiSVD<Mat> svd(centered, Eigen::ComputeThinV);
    const double sigma_max = svd.singularValues()(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-12 * std::max(1.0, sigma_max)) ++rank;

    if (rank <= 1) {
        // Collinear: the hull is the segment between the extremes.
        const Vec u = svd.matrixV().col(0);
        double lo = 0.0, hi = 0.0;
        for (const Vec& v : verts) {
            const double t = (v - centroid).dot(u);
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
        return Vec(centroid + 0.5 * (lo + hi) * u);
    }
    if (rank == 2) {
        // Planar: exterior-angle formula in the spanning plane.
        const Vec u1 = svd.matrixV().col(0);
        const Vec u2 = svd.matrixV().col(1);
        std::vector<Vec> planar;
        planar.reserve(verts.size());
        for (const Vec& v : verts) {
            Vec w(2);
            w << (v - centroid).dot(u1), (v - centroid).dot(u2);
            planar.push_back(std::move(w));
        }
        const Vec s2 = steiner_polygon(planar);
        return Vec(centroid + s2[0] * u1 + s2[1] * u2);
    }

    // Solid hull: sphere quadrature s(K) = dim * avg_u [ u h_K(u) ] about the
    // vertex centroid.
    const std::vector<Vec> dirs = sphere_directions(dim, quad.nodes);
    Vec acc = Vec::Zero(dim);
    for (const Vec& u : dirs) {
        double h = -std::numeric_limits<double>::infinity();
        for (const Vec& v : verts) h = std::max(h, (v - centroid).dot(u));
        acc += u * h;
    }
    return Vec(centroid + static_cast<double>(dim) * acc / static_cast<double>(dirs.size()));
}

Vec steiner_rec(const ConvexBody& body, const QuadratureSpec& quad) {
    const auto& n = body.node();
    if (const auto* p = std::get_if<ConvexBody::Point>(&n)) return p->c;
    if (const auto* b = std::get_if<ConvexBody::Ball>(&n)) return b->center;
    if (const auto* h = std::get_if<ConvexBody::Hull>(&n))
        return steiner_hull(h->vertices, body.dim(), quad);
    if (const auto* m = std::get_if<ConvexBody::MinkowskiSum>(&n))
        return steiner_rec(*m->left, quad) + steiner_rec(*m->right, quad);
    if (const auto* s = std::get_if<ConvexBody::Scaled>(&n))
        return s->factor * steiner_rec(*s->body, quad);
    const auto& t = std::get<ConvexBody::Translated>(n);
    return t.offset + steiner_rec(*t.body, quad);
}

}  // namespace

Vec steiner_point(const ConvexBody& body, const QuadratureSpec& quad) {
    if (quad.nodes < 2) throw Error("steiner_point: quadrature needs at least 2 nodes");
    Vec s = steiner_rec(body, quad);
    if (quad.certify) {
        const DistanceResult dr = distance_to_point(body, s, quad.membership_tol);
        if (dr.dist > quad.membership_tol)
            throw MembershipError("steiner_point: membership certification failed", dr.dist);
        // Quadrature estimates that drift slightly outside are pulled back to
        // their projection; exact construction paths stay untouched.
        if (dr.dist > 0.25 * quad.membership_tol) s = dr.witness;
    }
    return s;
}

}  // namespace sdi
