#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "sdi/linalg.hpp"

namespace sdi {

class ConvexBody;
using BodyPtr = std::shared_ptr<const ConvexBody>;

// A nonempty compact convex subset of R^d, built from a closed constructor
// grammar: points, balls, finite hulls, Minkowski sums, nonnegative scalings
// and translations. Values are immutable and cheap to copy; every operation
// on them is pure.
class ConvexBody {
public:
    struct Point {
        Vec c;
    };
    struct Ball {
        Vec center;
        double radius;
    };
    struct Hull {
        std::vector<Vec> vertices;
    };
    struct MinkowskiSum {
        BodyPtr left;
        BodyPtr right;
    };
    struct Scaled {
        double factor;
        BodyPtr body;
    };
    struct Translated {
        Vec offset;
        BodyPtr body;
    };
    using Node = std::variant<Point, Ball, Hull, MinkowskiSum, Scaled, Translated>;

    static ConvexBody point(Vec c);
    static ConvexBody ball(Vec center, double radius);
    static ConvexBody hull(std::vector<Vec> vertices);
    static ConvexBody minkowski_sum(ConvexBody left, ConvexBody right);
    static ConvexBody scaled(double factor, ConvexBody body);
    static ConvexBody translated(Vec offset, ConvexBody body);

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] const Node& node() const { return *node_; }

private:
    ConvexBody(Node node, int dim);

    std::shared_ptr<const Node> node_;
    int dim_;
};

// Unit vector in R^d (Euclidean norm within 1e-12 of 1).
class Direction {
public:
    explicit Direction(Vec u);
    static Direction normalized(const Vec& v);

    [[nodiscard]] const Vec& u() const { return u_; }
    [[nodiscard]] int dim() const { return static_cast<int>(u_.size()); }

private:
    Vec u_;
};

// Every grammar term flattens to conv(vertices) + ball(0, radius): hulls and
// points contribute vertices, balls contribute radius, Minkowski sums combine
// both sides (vertex lists pairwise), scalings and translations act affinely.
struct RoundedPolytope {
    std::vector<Vec> vertices;  // nonempty, duplicates removed
    double radius = 0.0;
};

RoundedPolytope canonical_form(const ConvexBody& body, std::size_t vertex_cap = 1u << 16);

// h_K(u) = max_{x in K} <x, u>.
double support_value(const ConvexBody& body, const Direction& u);

// A maximizer of <., u> over K. Ties among hull vertices break to the
// lexicographically smallest vertex, so selections are deterministic.
Vec support_point(const ConvexBody& body, const Direction& u);

struct DistanceResult {
    double dist = 0.0;
    Vec witness;       // point of K within tol of the true projection
    double gap = 0.0;  // final Frank-Wolfe duality gap
    int iterations = 0;
};

// Distance from x to K by Frank-Wolfe over the support oracle, with away
// steps and exact line search. Stops once the duality gap certifies
// |dist - d(x, K)| <= tol (gap <= tol^2/2). The iteration budget defaults to
// max(1000, 10 * dim / sqrt(tol)) capped at 200000; exhausting it raises
// ConvergenceError carrying the best gap reached.
DistanceResult distance_to_point(const ConvexBody& body, const Vec& x, double tol,
                                 std::size_t max_iter = 0);

// Hausdorff distance with |result - true| <= tol. Polytope pairs use the
// exact vertex reduction, ball pairs are analytic, one-dimensional bodies are
// interval arithmetic, and planar mixed pairs are resolved exactly through
// the support-function difference arc by arc. Remaining mixed pairs in
// dimension >= 3 fall back to a certified direction net and raise an error
// naming the representation combination when the required net would exceed
// the node cap.
double hausdorff_distance(const ConvexBody& a, const ConvexBody& b, double tol);

struct QuadratureSpec {
    int nodes = 4096;             // sphere nodes for hull terms in dim >= 3
    double membership_tol = 1e-6; // certification tolerance for the result
    bool certify = true;          // callers that spot-check externally may skip
};

// Steiner point s(K). Exact for points, balls, segments, and planar hulls
// (exterior-angle weights); hull terms in dimension >= 3 use the sphere
// quadrature s(K) = d * avg_u[u h_K(u)]. Recursion over the grammar makes
// s additive over Minkowski sums and exactly equivariant under Translated.
// Membership of the result is certified via distance_to_point against
// quad.membership_tol; failure raises MembershipError with the residual.
Vec steiner_point(const ConvexBody& body, const QuadratureSpec& quad = {});

// Deterministic sphere nodes: Fibonacci lattice on S^2, angular grid on S^1,
// counter-based quasirandom directions above dimension 3.
std::vector<Vec> sphere_directions(int dim, int nodes);

}  // namespace sdi
