#include <doctest.h>

#include <cstdlib>
#include <string>

#include "sdi/config.hpp"
#include "sdi/errors.hpp"
#include "sdi/convex.hpp"
#include "sdi/scenario.hpp"

using namespace sdi;

namespace {

const char* kBenchmark = R"cfg(
# planar tube benchmark
[space]
dE = 2
dH = 1

[operator]
A = matrix([[-0.3, 0.2], [0.0, -0.4]])

[coefficients]
F = tube(center=[0.1, -0.1], matrix=[[-0.5, 0.1], [0.0, -0.4]], body=hull(points=[[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]), radius_fn=const(0.4))
G = tube(center=[0.0, 0.0], matrix=[[0.0, 0.0], [0.0, 0.0]], body=ball(center=[0.0, 0.0], radius=1.0), radius_fn=const(0.3))
L = linear(C=1.0)
p = 4
eta = 1.0

[scheme]
T = 1.0
dt = 0.00390625
n = 8
n_ladder = [2, 4, 8]
paths = 16
seed = 42
selector = steiner
store_selections = true
xi = point([1.0, 0.5])

[diagnostics]
bl_anchors = 8

[output]
dir = "."
)cfg";

}  // namespace

TEST_CASE("parse and reprint round-trips the benchmark config") {
    const ScenarioConfig cfg = parse_config_text(kBenchmark);
    const std::string printed = cfg.print();
    const ScenarioConfig again = parse_config_text(printed);
    CHECK(cfg == again);
    CHECK(config_hash(cfg) == config_hash(again));
}

TEST_CASE("unknown keys are fatal and echoed") {
    const std::string bad = std::string("[scheme]\nslector = steiner\n");
    CHECK_THROWS_WITH_AS((void)parse_config_text(bad), doctest::Contains("slector"), ConfigError);

    CHECK_THROWS_WITH_AS((void)parse_config_text("[nosuch]\nx = 1\n"),
                         doctest::Contains("nosuch"), ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("[space]\ndE = 2\ndE = 3\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("dE = 2\n"), ConfigError);
}

TEST_CASE("values cover numbers, booleans, lists, strings and calls") {
    const ScenarioConfig cfg = parse_config_text(
        "[scheme]\nT = 1.5\ndt = 2.5e-3\npaths = 10\nseed = 7\nstore_selections = false\n"
        "n_ladder = [2, 4]\nxi = gaussian(mean=[0.0], cov=[[1.0]])\n");
    CHECK(cfg.find("scheme", "T")->number == 1.5);
    CHECK(cfg.find("scheme", "dt")->number == doctest::Approx(0.0025));
    CHECK(cfg.find("scheme", "store_selections")->boolean == false);
    CHECK(cfg.find("scheme", "n_ladder")->items.size() == 2);
    const ConfigValue* xi = cfg.find("scheme", "xi");
    CHECK(xi->kind == ConfigValue::Kind::call);
    CHECK(xi->text == "gaussian");
    CHECK(xi->kwargs.size() == 2);
}

TEST_CASE("builder materializes the scenario and run parameters") {
    const BuiltScenario built = build_scenario(parse_config_text(kBenchmark));
    CHECK(built.scenario.dE == 2);
    CHECK(built.scenario.dH == 1);
    CHECK(built.scenario.T == 1.0);
    CHECK(built.scenario.hyp.p == 4.0);
    CHECK(built.scenario.store_selections);
    CHECK(built.run.n == 8);
    CHECK(built.run.n_ladder == std::vector<std::int64_t>{2, 4, 8});
    CHECK(built.run.paths == 16);
    CHECK(built.run.seed == 42);
    CHECK(built.run.bl_anchors == 8);
    CHECK(built.run.out_dir == ".");
    CHECK(built.scenario.scenario_hash != 0);

    // The drift body evaluates to a translated scaled square.
    const ConvexBody body = built.scenario.F(0.0, Vec(Vec::Zero(2)));
    const RoundedPolytope rp = canonical_form(body);
    CHECK(rp.vertices.size() == 4);
    CHECK(rp.radius == 0.0);
}

TEST_CASE("builder rejects inconsistent scenarios") {
    // eta must be positive.
    std::string bad_eta = kBenchmark;
    bad_eta.replace(bad_eta.find("eta = 1.0"), 9, "eta = 0.0");
    CHECK_THROWS_AS((void)build_scenario(parse_config_text(bad_eta)), Error);

    // paths must be positive.
    std::string bad_paths = kBenchmark;
    bad_paths.replace(bad_paths.find("paths = 16"), 10, "paths = 0 ");
    CHECK_THROWS_AS((void)build_scenario(parse_config_text(bad_paths)), ConfigError);

    // p must exceed 2.
    std::string bad_p = kBenchmark;
    bad_p.replace(bad_p.find("p = 4"), 5, "p = 2");
    CHECK_THROWS_AS((void)build_scenario(parse_config_text(bad_p)), Error);

    // operator dimension must match dE.
    std::string bad_dim = kBenchmark;
    bad_dim.replace(bad_dim.find("dE = 2"), 6, "dE = 3");
    CHECK_THROWS_AS((void)build_scenario(parse_config_text(bad_dim)), ConfigError);

    // missing required key
    CHECK_THROWS_WITH_AS((void)build_scenario(parse_config_text("[space]\ndE = 1\ndH = 1\n")),
                         doctest::Contains("missing"), ConfigError);
}

TEST_CASE("shipped benchmark configs round-trip through print") {
    const char* dir = std::getenv("SDI_CONFIG_DIR");
    REQUIRE(dir != nullptr);
    for (const char* name : {"ou.cfg", "tube2d.cfg", "osgood_sqrt.cfg"}) {
        const ScenarioConfig cfg = parse_config_file(std::string(dir) + "/" + name);
        const ScenarioConfig again = parse_config_text(cfg.print());
        CHECK(cfg == again);
        CHECK_NOTHROW((void)build_scenario(cfg));
    }
}

TEST_CASE("body grammar covers the nested constructors") {
    const char* cfg_text = R"cfg(
[space]
dE = 2
dH = 1
[operator]
A = rotation2d(0.5)
[coefficients]
F = tube(center=[0, 0], matrix=[[0, 0], [0, 0]], body=msum(scaled(0.5, hull(points=[[0,0],[1,0],[0,1]])), translated([1, 1], point([0, 0]))), radius_fn=affine(a=0.1, b=0.05))
G = singleton(matrix_fn=const([[0.2], [0.0]]))
L = loglinear(C=1)
p = 4
eta = 2
[scheme]
T = 1
dt = 0.125
paths = 2
xi = gaussian(mean=[0, 0], cov=[[0.01, 0.0], [0.0, 0.01]])
)cfg";
    const BuiltScenario built = build_scenario(parse_config_text(cfg_text));
    const Mat& A = built.scenario.op.generator();
    CHECK(A(0, 1) == -0.5);
    CHECK(A(1, 0) == 0.5);

    // At t = 1 the tube scales the body term by radius_fn = 0.15; the body is
    // the half triangle shifted by (1,1), so one corner lands at (0.15, 0.15).
    const RoundedPolytope rp = canonical_form(built.scenario.F(1.0, Vec(Vec::Zero(2))));
    CHECK(rp.vertices.size() == 3);
    bool has_corner = false;
    for (const Vec& v : rp.vertices)
        if (std::abs(v[0] - 0.15) < 1e-12 && std::abs(v[1] - 0.15) < 1e-12) has_corner = true;
    CHECK(has_corner);
    CHECK(rp.radius == 0.0);
}

TEST_CASE("operator presets expand to the documented matrices") {
    const char* cfg_text = R"cfg(
[space]
dE = 3
dH = 1
[operator]
A = shift_nilpotent(3)
[coefficients]
F = tube(center=[0, 0, 0], matrix=[[0,0,0],[0,0,0],[0,0,0]], body=point([0, 0, 0]), radius_fn=const(0))
G = singleton(matrix_fn=[[0.5], [0.0], [0.0]])
L = linear(C=1)
p = 3
eta = 1
[scheme]
T = 1
dt = 0.25
paths = 1
xi = point([1, 0, 0])
)cfg";
    const BuiltScenario built = build_scenario(parse_config_text(cfg_text));
    const Mat& A = built.scenario.op.generator();
    CHECK(A(0, 1) == 1.0);
    CHECK(A(1, 2) == 1.0);
    CHECK(A(1, 0) == 0.0);
    CHECK(built.scenario.G.codomain_dim() == 3);
}
