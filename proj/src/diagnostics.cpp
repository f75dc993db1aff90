#include "sdi/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "sdi/driver.hpp"
#include "sdi/errors.hpp"
#include "sdi/rng.hpp"

namespace sdi {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

MomentEstimate mean_with_se(const std::vector<double>& values) {
    MomentEstimate est;
    est.paths = static_cast<std::int64_t>(values.size());
    CompensatedSum sum;
    for (double v : values) sum.add(v);
    est.value = sum.value() / static_cast<double>(values.size());
    if (values.size() > 1) {
        CompensatedSum sq;
        for (double v : values) sq.add((v - est.value) * (v - est.value));
        const double var = sq.value() / static_cast<double>(values.size() - 1);
        est.std_error = std::sqrt(var / static_cast<double>(values.size()));
    }
    return est;
}

double sup_norm_distance(const PathEnsemble& a, std::int64_t pa, const PathEnsemble& b,
                         std::int64_t pb) {
    double m = 0.0;
    for (std::int64_t k = 0; k <= a.steps; ++k)
        m = std::max(m, (a.state(pa, k) - b.state(pb, k)).norm());
    return m;
}

void require_same_grid(const PathEnsemble& a, const PathEnsemble& b, const char* what) {
    if (a.steps != b.steps || a.dE != b.dE || std::abs(a.dt - b.dt) > 1e-15)
        throw Error(std::string(what) + ": ensembles live on different grids");
}

}  // namespace

MomentEstimate sup_moment(const PathEnsemble& X, double p) {
    if (X.paths == 0) throw Error("sup_moment: empty ensemble");
    if (!(p > 0.0)) throw Error("sup_moment: p must be > 0");
    std::vector<double> vals(static_cast<std::size_t>(X.paths));
    for (std::int64_t pth = 0; pth < X.paths; ++pth) {
        double sup = 0.0;
        for (std::int64_t k = 0; k <= X.steps; ++k) sup = std::max(sup, X.state(pth, k).norm());
        vals[static_cast<std::size_t>(pth)] = std::pow(sup, p);
    }
    return mean_with_se(vals);
}

MomentEstimate integral_moment(const PathEnsemble& X, double p) {
    if (X.paths == 0) throw Error("integral_moment: empty ensemble");
    if (!(p > 0.0)) throw Error("integral_moment: p must be > 0");
    std::vector<double> vals(static_cast<std::size_t>(X.paths));
    for (std::int64_t pth = 0; pth < X.paths; ++pth) {
        CompensatedSum acc;
        for (std::int64_t k = 0; k < X.steps; ++k) {
            const double a = std::pow(X.state(pth, k).norm(), p);
            const double b = std::pow(X.state(pth, k + 1).norm(), p);
            acc.add(0.5 * X.dt * (a + b));
        }
        vals[static_cast<std::size_t>(pth)] = acc.value();
    }
    return mean_with_se(vals);
}

const Mat& StepProcess::at(double t) const {
    std::size_t i = 0;
    while (i + 1 < times.size() && t >= times[i + 1]) ++i;
    return values[i];
}

double StepProcess::integral_norm_p(double t, double p) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double lo = times[i];
        const double hi = (i + 1 < times.size()) ? std::min(times[i + 1], t) : t;
        if (hi <= lo) continue;
        acc += std::pow(values[i].norm(), p) * (hi - lo);
    }
    return acc;
}

ConvolutionCheck convolution_inequality_check(const SemigroupOperator& op, const StepProcess& g,
                                              double p, std::span<const double> t_ladder,
                                              std::int64_t paths, std::uint64_t seed, double dt,
                                              int dH, int threads) {
    if (!(p > 2.0)) throw Error("convolution_inequality_check: p must be > 2");
    if (t_ladder.empty()) throw Error("convolution_inequality_check: empty time ladder");
    if (g.times.empty() || g.times.size() != g.values.size() || g.times.front() != 0.0)
        throw Error("convolution_inequality_check: malformed step process");

    const double t_max = *std::max_element(t_ladder.begin(), t_ladder.end());
    const double ratio = t_max / dt;
    const std::int64_t steps = static_cast<std::int64_t>(std::round(ratio));
    if (steps < 1 || std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
        throw Error("convolution_inequality_check: dt does not divide the ladder maximum");

    std::vector<std::int64_t> t_steps;
    for (double t : t_ladder) {
        const double r = t / dt;
        if (r < 0.5 || std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
            throw Error("convolution_inequality_check: ladder time off the grid");
        t_steps.push_back(static_cast<std::int64_t>(std::round(r)));
    }

    const int dE = op.dim();
    const Mat S_dt = op.exp_tA(dt);

    // Running sup of ||Y||^p per path at each ladder time.
    std::vector<std::vector<double>> sups(t_ladder.size(),
                                          std::vector<double>(static_cast<std::size_t>(paths)));
    parallel_for_paths(paths, threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t pth = lo; pth < hi; ++pth) {
            const BrownianPath w = generate_brownian(seed, pth, dH, t_max, dt);
            Vec y = Vec::Zero(dE);
            double running = 0.0;
            for (std::int64_t k = 0; k < steps; ++k) {
                const Mat& gk = g.at(static_cast<double>(k) * dt);
                if (gk.rows() != dE || gk.cols() != dH)
                    throw Error("convolution_inequality_check: step process dimension mismatch");
                Vec dw(dH);
                for (int c = 0; c < dH; ++c) dw[c] = w.increment(k, c);
                y = S_dt * (y + gk * dw);
                running = std::max(running, y.norm());
                for (std::size_t li = 0; li < t_steps.size(); ++li)
                    if (t_steps[li] == k + 1)
                        sups[li][static_cast<std::size_t>(pth)] = std::pow(running, p);
            }
        }
    });

    ConvolutionCheck out;
    double cmin = std::numeric_limits<double>::infinity();
    double cmax = 0.0;
    for (std::size_t li = 0; li < t_steps.size(); ++li) {
        const double t = t_ladder[li];
        const double lhs = mean_with_se(sups[li]).value;
        const double denom = std::pow(t, p / 2.0 - 1.0) * g.integral_norm_p(t, p);
        double c;
        if (denom > 0.0) {
            c = lhs / denom;
        } else {
            c = lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        }
        out.per_t.emplace_back(t, c);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    out.fit_Cp = cmax;
    if (cmax == 0.0) {
        out.stable = true;  // trivially holds for g = 0
        out.ratio_spread = 1.0;
    } else if (cmin > 0.0 && std::isfinite(cmax)) {
        out.ratio_spread = cmax / cmin;
        out.stable = out.ratio_spread <= 3.0;
    } else {
        out.ratio_spread = std::numeric_limits<double>::infinity();
        out.stable = false;
    }
    return out;
}

AldousTable aldous_statistic(const PathEnsemble& X, std::span<const double> deltas, double eta) {
    if (X.paths == 0) throw Error("aldous_statistic: empty ensemble");
    if (!(eta > 0.0)) throw Error("aldous_statistic: eta must be > 0");
    AldousTable table;
    for (double delta : deltas) {
        if (!(delta > 0.0) || delta > X.T + 1e-12)
            throw Error("aldous_statistic: deltas must lie in (0, T]");
        const std::int64_t max_sep =
            std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(delta / X.dt + 1e-12)));
        double worst = 0.0;
        for (std::int64_t i = 0; i <= X.steps; ++i) {
            for (std::int64_t l = 1; l <= max_sep && i + l <= X.steps; ++l) {
                std::int64_t count = 0;
                for (std::int64_t pth = 0; pth < X.paths; ++pth)
                    if ((X.state(pth, i + l) - X.state(pth, i)).norm() > eta) ++count;
                worst = std::max(worst,
                                 static_cast<double>(count) / static_cast<double>(X.paths));
            }
        }
        table.emplace_back(delta, worst);
    }
    return table;
}

double bl_distance(const PathEnsemble& a, const PathEnsemble& b, int anchors,
                   std::uint64_t seed) {
    require_same_grid(a, b, "bl_distance");
    if (anchors < 1) throw Error("bl_distance: anchors must be >= 1");

    // One shared counter key per anchor slot indexes both ensembles, so the
    // dictionary does not depend on the argument order.
    double best = 0.0;
    for (int k = 0; k < anchors; ++k) {
        const std::uint64_t draw = counter_u64(seed, static_cast<std::uint64_t>(k), 0, 0,
                                               philox::kAnchors);
        for (const PathEnsemble* anchor_src : {&a, &b}) {
            const std::int64_t idx =
                static_cast<std::int64_t>(draw % static_cast<std::uint64_t>(anchor_src->paths));
            CompensatedSum mean_a;
            for (std::int64_t pth = 0; pth < a.paths; ++pth)
                mean_a.add(std::max(0.0, 1.0 - sup_norm_distance(a, pth, *anchor_src, idx)));
            CompensatedSum mean_b;
            for (std::int64_t pth = 0; pth < b.paths; ++pth)
                mean_b.add(std::max(0.0, 1.0 - sup_norm_distance(b, pth, *anchor_src, idx)));
            const double diff = std::abs(mean_a.value() / static_cast<double>(a.paths) -
                                         mean_b.value() / static_cast<double>(b.paths));
            best = std::max(best, diff);
        }
    }
    return best;
}

std::vector<CoverageCurve> noncompactness_proxy(std::span<const PathEnsemble> ensembles,
                                                std::span<const double> radius_grid,
                                                int max_anchors) {
    if (ensembles.empty()) throw Error("noncompactness_proxy: no ensembles");
    if (max_anchors < 1) throw Error("noncompactness_proxy: max_anchors must be >= 1");
    for (const PathEnsemble& e : ensembles) require_same_grid(ensembles.front(), e,
                                                              "noncompactness_proxy");

    struct Ref {
        const PathEnsemble* e;
        std::int64_t path;
    };
    std::vector<Ref> pool;
    for (const PathEnsemble& e : ensembles)
        for (std::int64_t pth = 0; pth < e.paths; ++pth) pool.push_back({&e, pth});

    // Farthest-point greedy anchors over the pooled trajectories.
    std::vector<double> dist(pool.size(), std::numeric_limits<double>::infinity());
    std::size_t anchor = 0;  // deterministic start: first trajectory
    for (int a = 0; a < max_anchors; ++a) {
        double far = 0.0;
        std::size_t far_idx = anchor;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            const double d = sup_norm_distance(*pool[i].e, pool[i].path, *pool[anchor].e,
                                               pool[anchor].path);
            dist[i] = std::min(dist[i], d);
            if (dist[i] > far) {
                far = dist[i];
                far_idx = i;
            }
        }
        if (far == 0.0) break;
        anchor = far_idx;
    }

    std::vector<CoverageCurve> curves;
    std::size_t offset = 0;
    for (std::size_t ei = 0; ei < ensembles.size(); ++ei) {
        CoverageCurve c;
        c.label = "ensemble_" + std::to_string(ei);
        const std::size_t n = static_cast<std::size_t>(ensembles[ei].paths);
        for (double r : radius_grid) {
            std::size_t uncovered = 0;
            for (std::size_t i = offset; i < offset + n; ++i)
                if (dist[i] > r) ++uncovered;
            c.radii.push_back(r);
            c.uncovered.push_back(static_cast<double>(uncovered) / static_cast<double>(n));
        }
        curves.push_back(std::move(c));
        offset += n;
    }
    CoverageCurve pooled;
    pooled.label = "pooled";
    for (double r : radius_grid) {
        std::size_t uncovered = 0;
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (dist[i] > r) ++uncovered;
        pooled.radii.push_back(r);
        pooled.uncovered.push_back(static_cast<double>(uncovered) /
                                   static_cast<double>(pool.size()));
    }
    curves.push_back(std::move(pooled));
    return curves;
}

GronwallBound gronwall_bound(double p, double C_B_T, double E_xi_p, double eta, double C_conv,
                             double T) {
    GronwallBound out;
    out.c = std::pow(3.0, p - 1.0) * std::pow(C_B_T, p) *
            (E_xi_p + std::pow(2.0, p - 1.0) * std::pow(eta, p) * (1.0 + C_conv) * T);
    out.log_bound = std::log(T * out.c) + out.c * T;
    return out;
}

ResidualStats residual_stats(const PathEnsemble& X, std::span<const double> Z) {
    if (Z.size() != X.trajectories.size())
        throw Error("residual_stats: residual array does not match the ensemble");
    std::vector<double> terminal(static_cast<std::size_t>(X.paths));
    for (std::int64_t pth = 0; pth < X.paths; ++pth) {
        const double* z = Z.data() + (pth * (X.steps + 1) + X.steps) * X.dE;
        terminal[static_cast<std::size_t>(pth)] = Eigen::Map<const Vec>(z, X.dE).norm();
    }
    ResidualStats stats;
    stats.mean_terminal = mean_with_se(terminal);
    std::vector<double> sorted = terminal;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.9 * static_cast<double>(sorted.size())));  // nearest-rank
    stats.p90_terminal = sorted[std::min(sorted.size() - 1, rank == 0 ? 0 : rank - 1)];
    return stats;
}

void write_report_csv(const DiagnosticsReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_report_csv: cannot open " + path);
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(report.scenario_hash));
    out << "# scenario " << hash << "\n";
    out << "metric,param,value,std_error\n";
    out << "sup_moment_p," << fmt_double(report.p) << "," << fmt_double(report.sup_moment_p.value)
        << "," << fmt_double(report.sup_moment_p.std_error) << "\n";
    out << "gronwall_c,," << fmt_double(report.gronwall_c) << ",\n";
    out << "gronwall_log_bound,," << fmt_double(report.gronwall_log_bound) << ",\n";
    out << "gronwall_log_lhs,," << fmt_double(report.gronwall_log_lhs) << ",\n";
    out << "conv_constant_fit,," << fmt_double(report.conv_constant_fit) << ",\n";
    for (const auto& [delta, est] : report.aldous_table)
        out << "aldous," << fmt_double(delta) << "," << fmt_double(est) << ",\n";
    for (const auto& row : report.residual_table) {
        out << "residual_mean," << row.n << "," << fmt_double(row.mean) << ","
            << fmt_double(row.std_error) << "\n";
        out << "residual_p90," << row.n << "," << fmt_double(row.p90) << ",\n";
    }
    for (std::size_t i = 0; i < report.bl_matrix.size(); ++i)
        for (std::size_t j = 0; j < report.bl_matrix[i].size(); ++j) {
            if (j <= i) continue;
            out << "bl_distance," << report.ladder[i] << ":" << report.ladder[j] << ","
                << fmt_double(report.bl_matrix[i][j]) << ",\n";
        }
    for (const auto& curve : report.coverage)
        for (std::size_t i = 0; i < curve.radii.size(); ++i)
            out << "uncovered_" << curve.label << "," << fmt_double(curve.radii[i]) << ","
                << fmt_double(curve.uncovered[i]) << ",\n";
    for (const auto& [name, pass] : report.verdicts)
        out << "verdict_" << name << ",," << (pass ? "1" : "0") << ",\n";
}

void write_report_json(const DiagnosticsReport& report, const std::string& path) {
    nlohmann::json j;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(report.scenario_hash));
    j["scenario"] = hash;
    j["p"] = report.p;
    j["sup_moment_p"] = {{"value", report.sup_moment_p.value},
                         {"std_error", report.sup_moment_p.std_error},
                         {"paths", report.sup_moment_p.paths}};
    j["gronwall"] = {{"c", report.gronwall_c},
                     {"log_bound", report.gronwall_log_bound},
                     {"log_lhs", report.gronwall_log_lhs},
                     {"pass", report.gronwall_pass}};
    j["convolution"] = {{"fit_Cp", report.conv_constant_fit}, {"stable", report.conv_stable}};
    j["aldous"] = nlohmann::json::array();
    for (const auto& [delta, est] : report.aldous_table)
        j["aldous"].push_back({{"delta", delta}, {"estimate", est}});
    j["ladder"] = report.ladder;
    j["bl_matrix"] = report.bl_matrix;
    j["residual_table"] = nlohmann::json::array();
    for (const auto& row : report.residual_table)
        j["residual_table"].push_back({{"n", row.n},
                                       {"mean", row.mean},
                                       {"std_error", row.std_error},
                                       {"p90", row.p90}});
    j["coverage"] = nlohmann::json::array();
    for (const auto& curve : report.coverage)
        j["coverage"].push_back(
            {{"label", curve.label}, {"radii", curve.radii}, {"uncovered", curve.uncovered}});
    j["verdicts"] = nlohmann::json::object();
    for (const auto& [name, pass] : report.verdicts) j["verdicts"][name] = pass;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_report_json: cannot open " + path);
    out << j.dump(2) << "\n";
}

}  // namespace sdi
