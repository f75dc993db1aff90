#include "sdi/tonelli.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "sdi/errors.hpp"
#include "sdi/rng.hpp"

namespace sdi {

void validate_scenario(const InclusionScenario& sc) {
    if (sc.dE < 1 || sc.dH < 1) throw Error("scenario: dimensions must be positive");
    if (sc.op.dim() != sc.dE) throw Error("scenario: generator dimension mismatch");
    if (sc.F.domain_dim() != sc.dE || sc.F.codomain_dim() != sc.dE)
        throw Error("scenario: drift multimap must map R^dE into bodies of R^dE");
    if (sc.G.domain_dim() != sc.dE || sc.G.codomain_dim() != sc.dE * sc.dH)
        throw Error("scenario: diffusion multimap must map R^dE into bodies of R^(dE*dH)");
    if (!(sc.T > 0.0)) throw Error("scenario: horizon must be > 0");
    if (!(sc.norm_cap > 0.0)) throw Error("scenario: norm_cap must be > 0");
    if (const auto* v = std::get_if<Vec>(&sc.xi)) {
        if (static_cast<int>(v->size()) != sc.dE)
            throw Error("scenario: initial state dimension mismatch");
    } else {
        const auto& g = std::get<GaussianInitial>(sc.xi);
        if (static_cast<int>(g.mean.size()) != sc.dE || g.cov.rows() != sc.dE ||
            g.cov.cols() != sc.dE)
            throw Error("scenario: initial law dimension mismatch");
    }
}

InitialSampler::InitialSampler(const InclusionScenario& sc) {
    if (const auto* v = std::get_if<Vec>(&sc.xi)) {
        deterministic_ = true;
        fixed_ = *v;
        return;
    }
    deterministic_ = false;
    const auto& g = std::get<GaussianInitial>(sc.xi);
    mean_ = g.mean;
    if (g.cov.isZero(0.0)) {
        chol_ = Mat::Zero(g.cov.rows(), g.cov.cols());
    } else {
        Eigen::LLT<Mat> llt(g.cov);
        if (llt.info() != Eigen::Success)
            throw Error("scenario: initial covariance is not positive definite");
        chol_ = llt.matrixL();
    }
}

Vec InitialSampler::operator()(std::uint64_t seed, std::int64_t path_index) const {
    if (deterministic_) return fixed_;
    Vec z(mean_.size());
    for (Eigen::Index j = 0; j < z.size(); ++j)
        z[j] = counter_normal(seed, static_cast<std::uint64_t>(path_index), 0,
                              static_cast<uint32_t>(j), philox::kInitial);
    return mean_ + chol_ * z;
}

void parallel_for_paths(std::int64_t paths, int threads,
                        const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (threads <= 1 || paths <= 1) {
        fn(0, paths);
        return;
    }
    const int workers = static_cast<int>(std::min<std::int64_t>(threads, paths));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    const std::int64_t chunk = (paths + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = w * chunk;
        const std::int64_t hi = std::min<std::int64_t>(paths, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, w, lo, hi]() {
            try {
                fn(lo, hi);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace {

std::int64_t checked_divisor(double span, double dt, const char* what) {
    if (!(dt > 0.0)) throw Error(std::string(what) + ": dt must be > 0");
    const double ratio = span / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw Error(std::string(what) + ": grid step does not divide the span");
    return static_cast<std::int64_t>(rounded);
}

// Selector for the diffusion under a support rule: the drift direction in
// R^dE is lifted to R^{dE*dH} by tiling it across noise columns.
SelectionRule lift_rule_for_diffusion(const SelectionRule& rule, int dE, int dH) {
    if (const auto* s = std::get_if<SupportRule>(&rule)) {
        const Vec& u = s->u.u();
        Vec lifted(static_cast<Eigen::Index>(dE) * dH);
        const double scale = 1.0 / std::sqrt(static_cast<double>(dH));
        for (int i = 0; i < dE; ++i)
            for (int j = 0; j < dH; ++j) lifted[static_cast<Eigen::Index>(i) * dH + j] = u[i] * scale;
        return SupportRule{Direction::normalized(lifted)};
    }
    return rule;
}

SelectionRule engine_rule(const SelectionRule& rule) {
    // Membership is spot-checked at the ensemble level; skip the per-call
    // certification inside hot loops.
    if (const auto* s = std::get_if<SteinerRule>(&rule)) {
        SteinerRule r = *s;
        r.quad.certify = false;
        return r;
    }
    return rule;
}

struct EngineSelectors {
    Selector f;
    Selector g;
};

EngineSelectors make_selectors(const InclusionScenario& sc) {
    const SelectionRule rf = engine_rule(sc.selector);
    const SelectionRule rg = engine_rule(lift_rule_for_diffusion(sc.selector, sc.dE, sc.dH));
    return {caratheodory_selector(sc.F, rf), caratheodory_selector(sc.G, rg)};
}

PathEnsemble make_ensemble(const InclusionScenario& sc, std::int64_t lag_n,
                           std::int64_t lag_steps, double dt, std::int64_t steps,
                           std::int64_t paths, std::uint64_t seed, bool with_selections) {
    PathEnsemble e;
    e.scenario_hash = sc.scenario_hash;
    e.lag_n = lag_n;
    e.lag_steps = lag_steps;
    e.dt = dt;
    e.T = sc.T;
    e.steps = steps;
    e.paths = paths;
    e.dE = sc.dE;
    e.dH = sc.dH;
    e.seed = seed;
    e.trajectories.assign(static_cast<std::size_t>(paths) * (steps + 1) * sc.dE, 0.0);
    e.has_selections = with_selections;
    if (with_selections) {
        e.selections_f.assign(static_cast<std::size_t>(paths) * steps * sc.dE, 0.0);
        e.selections_g.assign(static_cast<std::size_t>(paths) * steps * sc.dE * sc.dH, 0.0);
    }
    return e;
}

void check_state(const Vec& x, double cap, std::int64_t path, std::int64_t step) {
    if (!x.allFinite())
        throw BlowupError("simulation produced a non-finite state", path, step);
    if (x.norm() > cap)
        throw BlowupError("simulation exceeded the norm cap", path, step);
}

// Spot-check that stored drift values lie in the drift set at their selection
// points (first path, three probes).
void spot_check_selections(const InclusionScenario& sc, const PathEnsemble& e) {
    if (!e.has_selections || e.paths == 0 || e.steps == 0) return;
    const double tol = 1e-6;
    const std::int64_t probes[3] = {0, e.steps / 2, e.steps - 1};
    for (std::int64_t j : probes) {
        const double t = static_cast<double>(j) * e.dt;
        const Vec x = e.state(0, j);
        const Vec f = e.selection_f(0, j);
        const DistanceResult dr = distance_to_point(sc.F(t, x), f, tol);
        if (dr.dist > tol)
            throw MembershipError("tonelli: stored drift selection failed the membership check",
                                  dr.dist);
    }
}

}  // namespace

PathEnsemble tonelli_step_ensemble(const InclusionScenario& sc, std::int64_t n, double dt,
                                   std::int64_t paths, std::uint64_t seed, int threads) {
    validate_scenario(sc);
    if (n < 1) throw Error("tonelli: n must be >= 1");
    if (paths < 1) throw Error("tonelli: paths must be >= 1");
    const std::int64_t steps = checked_divisor(sc.T, dt, "tonelli");
    const std::int64_t lag_steps = checked_divisor(1.0 / static_cast<double>(n), dt, "tonelli lag");

    PathEnsemble e = make_ensemble(sc, n, lag_steps, dt, steps, paths, seed, sc.store_selections);
    const EngineSelectors sel = make_selectors(sc);
    const InitialSampler xi(sc);
    const Mat S_dt = sc.op.exp_tA(dt);
    const Mat S_lag1 = sc.op.exp_tA(static_cast<double>(lag_steps + 1) * dt);
    const std::int64_t L = lag_steps;

    parallel_for_paths(paths, threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t p = lo; p < hi; ++p) {
            const BrownianPath w = generate_brownian(seed, p, sc.dH, sc.T, dt);
            const Vec x0 = xi(seed, p);
            check_state(x0, sc.norm_cap, p, 0);

            auto state_ptr = [&](std::int64_t k) {
                return e.trajectories.data() + (p * (steps + 1) + k) * sc.dE;
            };
            auto store_f = [&](std::int64_t j, const Vec& v) {
                if (e.has_selections)
                    Eigen::Map<Vec>(e.selections_f.data() + (p * steps + j) * sc.dE, sc.dE) = v;
            };
            auto store_g = [&](std::int64_t j, const Vec& v) {
                if (e.has_selections)
                    Eigen::Map<Vec>(e.selections_g.data() + (p * steps + j) * sc.dE * sc.dH,
                                    static_cast<Eigen::Index>(sc.dE) * sc.dH) = v;
            };

            for (std::int64_t k = 0; k <= std::min(L, steps); ++k)
                Eigen::Map<Vec>(state_ptr(k), sc.dE) = x0;

            Vec x = x0;
            for (std::int64_t k = L; k < steps; ++k) {
                const std::int64_t j = k - L;  // selection step consumed now
                const double tj = static_cast<double>(j) * dt;
                const Vec xj = Eigen::Map<const Vec>(state_ptr(j), sc.dE);
                const Vec fj = sel.f(tj, xj);
                const Vec gj = sel.g(tj, xj);
                store_f(j, fj);
                store_g(j, gj);

                Vec dw(sc.dH);
                for (int c = 0; c < sc.dH; ++c) dw[c] = w.increment(j, c);
                const Mat gmat = unflatten(gj, sc.dE, sc.dH);
                const Vec kick = fj * dt + gmat * dw;
                x = S_dt * x + S_lag1 * kick;
                check_state(x, sc.norm_cap, p, k + 1);
                Eigen::Map<Vec>(state_ptr(k + 1), sc.dE) = x;
            }

            // Selections after steps - L are never consumed by the recursion
            // but complete the audit trail for residual evaluation.
            if (e.has_selections) {
                for (std::int64_t j = std::max<std::int64_t>(steps - L, 0); j < steps; ++j) {
                    const double tj = static_cast<double>(j) * dt;
                    const Vec xj = Eigen::Map<const Vec>(state_ptr(j), sc.dE);
                    store_f(j, sel.f(tj, xj));
                    store_g(j, sel.g(tj, xj));
                }
            }
        }
    });

    spot_check_selections(sc, e);
    return e;
}

PathEnsemble phi_apply(const InclusionScenario& sc, const PathEnsemble& X,
                       std::optional<std::int64_t> lag_n, bool use_stored_selections,
                       int threads) {
    validate_scenario(sc);
    if (X.dE != sc.dE || X.dH != sc.dH) throw Error("phi_apply: ensemble dimension mismatch");
    if (std::abs(X.T - sc.T) > 1e-12 * std::max(1.0, sc.T))
        throw Error("phi_apply: ensemble horizon mismatch");
    if (use_stored_selections && !X.has_selections)
        throw Error("phi_apply: ensemble carries no stored selections");

    std::int64_t L = 0;
    std::int64_t n_tag = 0;
    if (lag_n) {
        if (*lag_n < 1) throw Error("phi_apply: lag n must be >= 1");
        L = checked_divisor(1.0 / static_cast<double>(*lag_n), X.dt, "phi_apply lag");
        n_tag = *lag_n;
    }

    PathEnsemble out = make_ensemble(sc, n_tag, L, X.dt, X.steps, X.paths, X.seed,
                                     sc.store_selections);
    const EngineSelectors sel = make_selectors(sc);
    const InitialSampler xi(sc);
    const Mat S_dt = sc.op.exp_tA(X.dt);
    const Mat S_lag1 = sc.op.exp_tA(static_cast<double>(L + 1) * X.dt);
    const double dt = X.dt;
    const std::int64_t steps = X.steps;

    parallel_for_paths(X.paths, threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t p = lo; p < hi; ++p) {
            const BrownianPath w = generate_brownian(X.seed, p, sc.dH, sc.T, dt);
            const Vec x0 = xi(X.seed, p);

            auto out_ptr = [&](std::int64_t k) {
                return out.trajectories.data() + (p * (steps + 1) + k) * sc.dE;
            };

            // Selected coefficients along the *input* trajectories.
            auto select_pair = [&](std::int64_t j, Vec& fj, Vec& gj) {
                if (use_stored_selections) {
                    fj = X.selection_f(p, j);
                    gj = X.selection_g(p, j);
                } else {
                    const double tj = static_cast<double>(j) * dt;
                    const Vec xj = X.state(p, j);
                    fj = sel.f(tj, xj);
                    gj = sel.g(tj, xj);
                }
                if (out.has_selections) {
                    Eigen::Map<Vec>(out.selections_f.data() + (p * steps + j) * sc.dE, sc.dE) = fj;
                    Eigen::Map<Vec>(out.selections_g.data() + (p * steps + j) * sc.dE * sc.dH,
                                    static_cast<Eigen::Index>(sc.dE) * sc.dH) = gj;
                }
            };

            for (std::int64_t k = 0; k <= std::min(L, steps); ++k)
                Eigen::Map<Vec>(out_ptr(k), sc.dE) = x0;

            Vec propagated = x0;     // S(t_k - lag) xi for k >= L
            Vec convolution = Vec::Zero(sc.dE);
            for (std::int64_t k = L; k < steps; ++k) {
                const std::int64_t j = k - L;
                Vec fj, gj;
                select_pair(j, fj, gj);
                Vec dw(sc.dH);
                for (int c = 0; c < sc.dH; ++c) dw[c] = w.increment(j, c);
                const Mat gmat = unflatten(gj, sc.dE, sc.dH);
                const Vec kick = fj * dt + gmat * dw;
                propagated = S_dt * propagated;
                convolution = S_dt * convolution + S_lag1 * kick;
                Vec y = propagated + convolution;
                check_state(y, sc.norm_cap, p, k + 1);
                Eigen::Map<Vec>(out_ptr(k + 1), sc.dE) = y;
            }

            if (out.has_selections) {
                for (std::int64_t j = std::max<std::int64_t>(steps - L, 0); j < steps; ++j) {
                    Vec fj, gj;
                    select_pair(j, fj, gj);
                }
            }
        }
    });

    return out;
}

std::vector<double> residual_Z(const InclusionScenario& sc, const PathEnsemble& X, int threads) {
    if (!X.has_selections)
        throw Error("residual_Z: ensemble carries no stored selections");
    const PathEnsemble full = phi_apply(sc, X, std::nullopt, /*use_stored_selections=*/true,
                                        threads);
    std::vector<double> z(X.trajectories.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = full.trajectories[i] - X.trajectories[i];
    return z;
}

PathEnsemble mild_euler_reference(const InclusionScenario& sc, double dt, std::int64_t paths,
                                  std::uint64_t seed, int threads) {
    validate_scenario(sc);
    if (paths < 1) throw Error("mild_euler_reference: paths must be >= 1");
    const std::int64_t steps = checked_divisor(sc.T, dt, "mild_euler_reference");

    // Singleton check on a few samples across the time/state box.
    {
        const InitialSampler xi(sc);
        const Vec base = xi(seed, 0);
        const std::vector<double> ts = {0.0, 0.5 * sc.T, sc.T};
        std::vector<Vec> xs = {base, Vec(Vec::Zero(sc.dE)), Vec(Vec::Ones(sc.dE))};
        for (double t : ts)
            for (const Vec& x : xs) {
                for (const MultiMap* m : {&sc.F, &sc.G}) {
                    const RoundedPolytope rp = canonical_form((*m)(t, x));
                    double spread = rp.radius;
                    for (const Vec& v : rp.vertices)
                        spread = std::max(spread, (v - rp.vertices.front()).norm());
                    if (spread > 1e-9)
                        throw Error("mild_euler_reference: coefficient '" + m->description() +
                                    "' is not singleton-valued (spread " + std::to_string(spread) +
                                    ")");
                }
            }
    }

    PathEnsemble e = make_ensemble(sc, 0, 0, dt, steps, paths, seed, sc.store_selections);
    const EngineSelectors sel = make_selectors(sc);
    const InitialSampler xi(sc);
    const Mat S_dt = sc.op.exp_tA(dt);

    parallel_for_paths(paths, threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t p = lo; p < hi; ++p) {
            const BrownianPath w = generate_brownian(seed, p, sc.dH, sc.T, dt);
            Vec x = xi(seed, p);
            check_state(x, sc.norm_cap, p, 0);
            auto state_ptr = [&](std::int64_t k) {
                return e.trajectories.data() + (p * (steps + 1) + k) * sc.dE;
            };
            Eigen::Map<Vec>(state_ptr(0), sc.dE) = x;
            for (std::int64_t k = 0; k < steps; ++k) {
                const double tk = static_cast<double>(k) * dt;
                const Vec fk = sel.f(tk, x);
                const Vec gk = sel.g(tk, x);
                if (e.has_selections) {
                    Eigen::Map<Vec>(e.selections_f.data() + (p * steps + k) * sc.dE, sc.dE) = fk;
                    Eigen::Map<Vec>(e.selections_g.data() + (p * steps + k) * sc.dE * sc.dH,
                                    static_cast<Eigen::Index>(sc.dE) * sc.dH) = gk;
                }
                Vec dw(sc.dH);
                for (int c = 0; c < sc.dH; ++c) dw[c] = w.increment(k, c);
                const Mat gmat = unflatten(gk, sc.dE, sc.dH);
                x = S_dt * (x + fk * dt + gmat * dw);
                check_state(x, sc.norm_cap, p, k + 1);
                Eigen::Map<Vec>(state_ptr(k + 1), sc.dE) = x;
            }
        }
    });

    return e;
}

}  // namespace sdi
