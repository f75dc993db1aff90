#include "sdi/scenario.hpp"

#include <cmath>
#include <functional>

#include "sdi/errors.hpp"

namespace sdi {

namespace {

[[noreturn]] void bad(const ConfigValue& v, const std::string& msg) {
    throw ConfigError(msg, v.line);
}

double as_number(const ConfigValue& v, const std::string& what) {
    if (v.kind != ConfigValue::Kind::number) bad(v, what + " must be a number");
    return v.number;
}

std::int64_t as_integer(const ConfigValue& v, const std::string& what) {
    const double d = as_number(v, what);
    if (d != std::floor(d)) bad(v, what + " must be an integer");
    return static_cast<std::int64_t>(d);
}

bool as_boolean(const ConfigValue& v, const std::string& what) {
    if (v.kind != ConfigValue::Kind::boolean) bad(v, what + " must be true or false");
    return v.boolean;
}

Vec as_vector(const ConfigValue& v, const std::string& what) {
    if (v.kind != ConfigValue::Kind::list || v.items.empty())
        bad(v, what + " must be a nonempty list of numbers");
    Vec out(static_cast<Eigen::Index>(v.items.size()));
    for (std::size_t i = 0; i < v.items.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = as_number(v.items[i], what + " entry");
    return out;
}

Mat as_matrix(const ConfigValue& v, const std::string& what) {
    if (v.kind != ConfigValue::Kind::list || v.items.empty())
        bad(v, what + " must be a nonempty list of rows");
    const std::size_t cols = v.items.front().items.size();
    Mat out(static_cast<Eigen::Index>(v.items.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.items.size(); ++i) {
        const Vec row = as_vector(v.items[i], what + " row");
        if (static_cast<std::size_t>(row.size()) != cols) bad(v, what + " rows differ in length");
        out.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return out;
}

std::vector<double> as_number_list(const ConfigValue& v, const std::string& what) {
    if (v.kind != ConfigValue::Kind::list) bad(v, what + " must be a list");
    std::vector<double> out;
    for (const auto& item : v.items) out.push_back(as_number(item, what + " entry"));
    return out;
}

// Call-term helpers ---------------------------------------------------------

const ConfigValue* kwarg(const ConfigValue& call, const std::string& name) {
    for (const auto& [k, v] : call.kwargs)
        if (k == name) return &v;
    return nullptr;
}

const ConfigValue& need_kwarg(const ConfigValue& call, const std::string& name) {
    const ConfigValue* v = kwarg(call, name);
    if (!v) bad(call, call.text + ": missing argument '" + name + "'");
    return *v;
}

const ConfigValue& positional(const ConfigValue& call, std::size_t i, const std::string& what) {
    if (call.items.size() <= i) bad(call, call.text + ": missing " + what);
    return call.items[i];
}

void check_args(const ConfigValue& call, std::size_t max_positional,
                std::initializer_list<const char*> allowed) {
    if (call.items.size() > max_positional)
        bad(call, call.text + ": too many positional arguments");
    for (const auto& [k, _] : call.kwargs) {
        bool ok = false;
        for (const char* a : allowed)
            if (k == a) ok = true;
        if (!ok) bad(call, call.text + ": unknown argument '" + k + "'");
    }
}

// Grammar: bodies -----------------------------------------------------------

ConvexBody parse_body(const ConfigValue& v);

ConvexBody parse_body(const ConfigValue& v) {
    if (v.kind != ConfigValue::Kind::call) bad(v, "expected a body term");
    const std::string& head = v.text;
    if (head == "point") {
        check_args(v, 1, {"c"});
        const ConfigValue& c = v.kwargs.empty() ? positional(v, 0, "coordinates") : need_kwarg(v, "c");
        return ConvexBody::point(as_vector(c, "point coordinates"));
    }
    if (head == "ball") {
        check_args(v, 0, {"center", "radius"});
        return ConvexBody::ball(as_vector(need_kwarg(v, "center"), "ball center"),
                                as_number(need_kwarg(v, "radius"), "ball radius"));
    }
    if (head == "hull") {
        check_args(v, 0, {"points"});
        const ConfigValue& pts = need_kwarg(v, "points");
        if (pts.kind != ConfigValue::Kind::list || pts.items.empty())
            bad(pts, "hull points must be a nonempty list");
        std::vector<Vec> verts;
        for (const auto& item : pts.items) verts.push_back(as_vector(item, "hull point"));
        return ConvexBody::hull(std::move(verts));
    }
    if (head == "msum") {
        check_args(v, 2, {});
        return ConvexBody::minkowski_sum(parse_body(positional(v, 0, "left operand")),
                                         parse_body(positional(v, 1, "right operand")));
    }
    if (head == "scaled") {
        check_args(v, 2, {"factor", "body"});
        const ConfigValue& f = v.items.empty() ? need_kwarg(v, "factor") : positional(v, 0, "factor");
        const ConfigValue& b = v.items.size() > 1 ? positional(v, 1, "body") : need_kwarg(v, "body");
        return ConvexBody::scaled(as_number(f, "scale factor"), parse_body(b));
    }
    if (head == "translated") {
        check_args(v, 2, {"offset", "body"});
        const ConfigValue& o = v.items.empty() ? need_kwarg(v, "offset") : positional(v, 0, "offset");
        const ConfigValue& b = v.items.size() > 1 ? positional(v, 1, "body") : need_kwarg(v, "body");
        return ConvexBody::translated(as_vector(o, "offset"), parse_body(b));
    }
    bad(v, "unknown body constructor '" + head + "'");
}

// Grammar: scalar/matrix functions of time -----------------------------------

std::function<double(double)> parse_scalar_fn(const ConfigValue& v) {
    if (v.kind == ConfigValue::Kind::number) {
        const double c = v.number;
        return [c](double) { return c; };
    }
    if (v.kind != ConfigValue::Kind::call) bad(v, "expected const(...) or affine(...)");
    if (v.text == "const") {
        check_args(v, 1, {"value"});
        const ConfigValue& c = v.kwargs.empty() ? positional(v, 0, "value") : need_kwarg(v, "value");
        const double value = as_number(c, "const value");
        return [value](double) { return value; };
    }
    if (v.text == "affine") {
        check_args(v, 0, {"a", "b"});
        const double a = as_number(need_kwarg(v, "a"), "affine a");
        const double b = as_number(need_kwarg(v, "b"), "affine b");
        return [a, b](double t) { return a + b * t; };
    }
    bad(v, "unknown time function '" + v.text + "'");
}

std::function<Mat(double)> parse_matrix_fn(const ConfigValue& v, const std::string& what) {
    if (v.kind == ConfigValue::Kind::list) {
        const Mat m = as_matrix(v, what);
        return [m](double) { return m; };
    }
    if (v.kind == ConfigValue::Kind::call && v.text == "const") {
        check_args(v, 1, {"value"});
        const ConfigValue& c = v.kwargs.empty() ? positional(v, 0, "value") : need_kwarg(v, "value");
        const Mat m = as_matrix(c, what);
        return [m](double) { return m; };
    }
    bad(v, what + ": expected a matrix literal or const(matrix)");
}

// Grammar: operator presets --------------------------------------------------

Mat parse_operator(const ConfigValue& v) {
    if (v.kind != ConfigValue::Kind::call) bad(v, "operator A must be a constructor term");
    if (v.text == "matrix") {
        check_args(v, 1, {"rows"});
        const ConfigValue& rows = v.kwargs.empty() ? positional(v, 0, "rows") : need_kwarg(v, "rows");
        const Mat m = as_matrix(rows, "A");
        if (m.rows() != m.cols()) bad(v, "A must be square");
        return m;
    }
    if (v.text == "zero") {
        check_args(v, 1, {"d"});
        const std::int64_t d = as_integer(v.kwargs.empty() ? positional(v, 0, "dimension")
                                                           : need_kwarg(v, "d"),
                                          "zero dimension");
        if (d < 1) bad(v, "zero: dimension must be >= 1");
        return Mat::Zero(d, d);
    }
    if (v.text == "scaled_identity") {
        check_args(v, 2, {"d", "lambda"});
        const std::int64_t d = as_integer(v.items.empty() ? need_kwarg(v, "d")
                                                          : positional(v, 0, "dimension"),
                                          "scaled_identity dimension");
        const double lambda = as_number(v.items.size() > 1 ? positional(v, 1, "lambda")
                                                           : need_kwarg(v, "lambda"),
                                        "scaled_identity lambda");
        if (d < 1) bad(v, "scaled_identity: dimension must be >= 1");
        return lambda * Mat::Identity(d, d);
    }
    if (v.text == "shift_nilpotent") {
        check_args(v, 1, {"d"});
        const std::int64_t d = as_integer(v.kwargs.empty() ? positional(v, 0, "dimension")
                                                           : need_kwarg(v, "d"),
                                          "shift_nilpotent dimension");
        if (d < 1) bad(v, "shift_nilpotent: dimension must be >= 1");
        Mat m = Mat::Zero(d, d);
        for (std::int64_t i = 0; i + 1 < d; ++i) m(i, i + 1) = 1.0;
        return m;
    }
    if (v.text == "rotation2d") {
        check_args(v, 1, {"theta_rate"});
        const double rate = as_number(v.kwargs.empty() ? positional(v, 0, "theta_rate")
                                                       : need_kwarg(v, "theta_rate"),
                                      "rotation2d rate");
        Mat m(2, 2);
        m << 0.0, -rate, rate, 0.0;
        return m;
    }
    bad(v, "unknown operator constructor '" + v.text + "'");
}

// Grammar: coefficient multimaps ---------------------------------------------

MultiMap parse_multimap(const ConfigValue& v, int dE, int codomain, const std::string& name) {
    if (v.kind != ConfigValue::Kind::call) bad(v, name + " must be a constructor term");
    if (v.text == "tube") {
        check_args(v, 0, {"center", "matrix", "body", "radius_fn"});
        Vec center = as_vector(need_kwarg(v, "center"), "tube center");
        Mat B = as_matrix(need_kwarg(v, "matrix"), "tube matrix");
        ConvexBody body = parse_body(need_kwarg(v, "body"));
        auto radius_fn = parse_scalar_fn(need_kwarg(v, "radius_fn"));
        if (static_cast<int>(center.size()) != codomain || B.rows() != codomain ||
            B.cols() != dE || body.dim() != codomain)
            bad(v, name + ": tube dimensions do not match the scenario");
        return affine_tube(std::move(center), std::move(B), std::move(body), std::move(radius_fn),
                           name + "=tube");
    }
    if (v.text == "singleton") {
        check_args(v, 0, {"matrix_fn"});
        auto fn = parse_matrix_fn(need_kwarg(v, "matrix_fn"), name + " matrix_fn");
        const Mat probe = fn(0.0);
        if (static_cast<int>(probe.rows() * probe.cols()) != codomain)
            bad(v, name + ": singleton matrix has the wrong size");
        return singleton_matrix(std::move(fn), dE, static_cast<int>(probe.rows()),
                                static_cast<int>(probe.cols()), name + "=singleton");
    }
    if (v.text == "osgood_scalar") {
        check_args(v, 0, {"C", "p"});
        if (dE != 1 || codomain != 1) bad(v, name + ": osgood_scalar needs dE = dH = 1");
        const double C = as_number(need_kwarg(v, "C"), "osgood_scalar C");
        const ConfigValue* pv = kwarg(v, "p");
        const double p = pv ? as_number(*pv, "osgood_scalar p") : 4.0;
        return osgood_scalar_drift(C, p);
    }
    bad(v, "unknown coefficient constructor '" + v.text + "'");
}

OsgoodModulus parse_modulus(const ConfigValue& v) {
    if (v.kind != ConfigValue::Kind::call) bad(v, "L must be a constructor term");
    const double C = as_number(need_kwarg(v, "C"), "modulus C");
    if (v.text == "linear") return linear_modulus(C);
    if (v.text == "loglinear") return loglinear_modulus(C);
    if (v.text == "sqrt") return sqrt_modulus(C);
    bad(v, "unknown modulus '" + v.text + "'");
}

InitialCondition parse_initial(const ConfigValue& v, int dE) {
    if (v.kind != ConfigValue::Kind::call) bad(v, "xi must be point(...) or gaussian(...)");
    if (v.text == "point") {
        check_args(v, 1, {"c"});
        const ConfigValue& c = v.kwargs.empty() ? positional(v, 0, "coordinates") : need_kwarg(v, "c");
        Vec x = as_vector(c, "xi point");
        if (static_cast<int>(x.size()) != dE) bad(v, "xi dimension mismatch");
        return x;
    }
    if (v.text == "gaussian") {
        check_args(v, 0, {"mean", "cov"});
        GaussianInitial g;
        g.mean = as_vector(need_kwarg(v, "mean"), "xi mean");
        g.cov = as_matrix(need_kwarg(v, "cov"), "xi cov");
        if (static_cast<int>(g.mean.size()) != dE || g.cov.rows() != dE || g.cov.cols() != dE)
            bad(v, "xi dimension mismatch");
        return g;
    }
    bad(v, "unknown initial condition '" + v.text + "'");
}

SelectionRule parse_selector(const ConfigValue& v, int dE) {
    if (v.kind == ConfigValue::Kind::string) {
        if (v.text == "steiner") return SteinerRule{};
        if (v.text == "vertex_random") return VertexRandomRule{};
        bad(v, "unknown selector '" + v.text + "'");
    }
    if (v.kind != ConfigValue::Kind::call) bad(v, "selector must be a name or constructor term");
    if (v.text == "steiner") {
        check_args(v, 0, {"nodes", "tol"});
        SteinerRule r;
        if (const ConfigValue* nodes = kwarg(v, "nodes"))
            r.quad.nodes = static_cast<int>(as_integer(*nodes, "steiner nodes"));
        if (const ConfigValue* tol = kwarg(v, "tol"))
            r.quad.membership_tol = as_number(*tol, "steiner tol");
        return r;
    }
    if (v.text == "support") {
        check_args(v, 0, {"u"});
        Vec u = as_vector(need_kwarg(v, "u"), "support direction");
        if (static_cast<int>(u.size()) != dE) bad(v, "support direction dimension mismatch");
        return SupportRule{Direction::normalized(u)};
    }
    if (v.text == "vertex_random") {
        check_args(v, 0, {"seed"});
        VertexRandomRule r;
        if (const ConfigValue* s = kwarg(v, "seed"))
            r.seed = static_cast<std::uint64_t>(as_integer(*s, "vertex_random seed"));
        return r;
    }
    bad(v, "unknown selector '" + v.text + "'");
}

const ConfigValue& require_key(const ScenarioConfig& cfg, const std::string& section,
                               const std::string& key) {
    const ConfigValue* v = cfg.find(section, key);
    if (!v) throw ConfigError("missing required key '" + key + "' in [" + section + "]");
    return *v;
}

}  // namespace

BuiltScenario build_scenario(const ScenarioConfig& cfg) {
    const std::int64_t dE = as_integer(require_key(cfg, "space", "dE"), "dE");
    const std::int64_t dH = as_integer(require_key(cfg, "space", "dH"), "dH");
    if (dE < 1 || dH < 1) throw ConfigError("[space] dimensions must be >= 1");

    Mat A = parse_operator(require_key(cfg, "operator", "A"));
    if (A.rows() != dE) throw ConfigError("[operator] A dimension does not match dE");

    const double T = as_number(require_key(cfg, "scheme", "T"), "T");
    if (!(T > 0.0)) throw ConfigError("[scheme] T must be > 0");

    const double p = as_number(require_key(cfg, "coefficients", "p"), "p");
    const double eta = as_number(require_key(cfg, "coefficients", "eta"), "eta");
    OsgoodModulus L = parse_modulus(require_key(cfg, "coefficients", "L"));
    CoefficientHypotheses hyp(eta, std::move(L), p);  // validates eta > 0, p > 2

    MultiMap F = parse_multimap(require_key(cfg, "coefficients", "F"), static_cast<int>(dE),
                                static_cast<int>(dE), "F");
    MultiMap G = parse_multimap(require_key(cfg, "coefficients", "G"), static_cast<int>(dE),
                                static_cast<int>(dE * dH), "G");

    SelectionRule selector = SteinerRule{};
    if (const ConfigValue* sel = cfg.find("scheme", "selector"))
        selector = parse_selector(*sel, static_cast<int>(dE));

    InclusionScenario sc{
        static_cast<int>(dE),
        static_cast<int>(dH),
        SemigroupOperator(std::move(A), T),
        std::move(F),
        std::move(G),
        std::move(hyp),
        parse_initial(require_key(cfg, "scheme", "xi"), static_cast<int>(dE)),
        T,
        std::move(selector),
    };
    if (const ConfigValue* cap = cfg.find("scheme", "norm_cap")) {
        sc.norm_cap = as_number(*cap, "norm_cap");
        if (!(sc.norm_cap > 0.0)) throw ConfigError("[scheme] norm_cap must be > 0");
    }
    if (const ConfigValue* store = cfg.find("scheme", "store_selections"))
        sc.store_selections = as_boolean(*store, "store_selections");
    sc.scenario_hash = config_hash(cfg);
    validate_scenario(sc);

    RunParameters run;
    run.dt = as_number(require_key(cfg, "scheme", "dt"), "dt");
    if (!(run.dt > 0.0)) throw ConfigError("[scheme] dt must be > 0");
    run.paths = as_integer(require_key(cfg, "scheme", "paths"), "paths");
    if (run.paths < 1) throw ConfigError("[scheme] paths must be >= 1");
    if (const ConfigValue* seed = cfg.find("scheme", "seed"))
        run.seed = static_cast<std::uint64_t>(as_integer(*seed, "seed"));
    if (const ConfigValue* n = cfg.find("scheme", "n")) {
        run.n = as_integer(*n, "n");
        if (run.n < 1) throw ConfigError("[scheme] n must be >= 1");
    }
    if (const ConfigValue* ladder = cfg.find("scheme", "n_ladder")) {
        for (double d : as_number_list(*ladder, "n_ladder")) {
            if (d < 1.0 || d != std::floor(d))
                throw ConfigError("[scheme] n_ladder entries must be positive integers");
            run.n_ladder.push_back(static_cast<std::int64_t>(d));
        }
        if (run.n_ladder.empty()) throw ConfigError("[scheme] n_ladder must be nonempty");
    }

    // Diagnostics knobs, defaulted from the scheme when absent.
    run.deltas = {T / 64.0, T / 32.0, T / 16.0, T / 8.0};
    run.conv_t_ladder = {T / 8.0, T / 4.0, T / 2.0, T};
    run.conv_dt = run.dt;
    run.conv_paths = std::min<std::int64_t>(run.paths, 2000);
    run.radius_grid = {0.0625, 0.125, 0.25, 0.5, 1.0, 2.0};
    if (const ConfigValue* v = cfg.find("diagnostics", "deltas"))
        run.deltas = as_number_list(*v, "deltas");
    if (const ConfigValue* v = cfg.find("diagnostics", "aldous_eta"))
        run.aldous_eta = as_number(*v, "aldous_eta");
    if (const ConfigValue* v = cfg.find("diagnostics", "bl_anchors"))
        run.bl_anchors = static_cast<int>(as_integer(*v, "bl_anchors"));
    if (const ConfigValue* v = cfg.find("diagnostics", "osgood_k"))
        run.osgood_k = as_number(*v, "osgood_k");
    if (const ConfigValue* v = cfg.find("diagnostics", "osgood_R0"))
        run.osgood_R0 = as_number(*v, "osgood_R0");
    if (const ConfigValue* v = cfg.find("diagnostics", "osgood_grid"))
        run.osgood_grid = static_cast<int>(as_integer(*v, "osgood_grid"));
    if (const ConfigValue* v = cfg.find("diagnostics", "osgood_iters"))
        run.osgood_iters = static_cast<int>(as_integer(*v, "osgood_iters"));
    if (const ConfigValue* v = cfg.find("diagnostics", "samples"))
        run.hyp_samples = static_cast<int>(as_integer(*v, "samples"));
    if (const ConfigValue* v = cfg.find("diagnostics", "box"))
        run.box_halfwidth = as_number(*v, "box");
    if (const ConfigValue* v = cfg.find("diagnostics", "conv_t_ladder"))
        run.conv_t_ladder = as_number_list(*v, "conv_t_ladder");
    if (const ConfigValue* v = cfg.find("diagnostics", "conv_paths"))
        run.conv_paths = as_integer(*v, "conv_paths");
    if (const ConfigValue* v = cfg.find("diagnostics", "conv_dt"))
        run.conv_dt = as_number(*v, "conv_dt");
    if (const ConfigValue* v = cfg.find("diagnostics", "radius_grid"))
        run.radius_grid = as_number_list(*v, "radius_grid");
    if (const ConfigValue* v = cfg.find("diagnostics", "max_anchors"))
        run.max_anchors = static_cast<int>(as_integer(*v, "max_anchors"));
    if (const ConfigValue* v = cfg.find("output", "dir")) {
        if (v->kind != ConfigValue::Kind::string) throw ConfigError("[output] dir must be a string");
        run.out_dir = v->text;
    }
    return BuiltScenario{std::move(sc), std::move(run)};
}

}  // namespace sdi
