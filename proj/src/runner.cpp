#include "sdi/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sdi/diagnostics.hpp"
#include "sdi/errors.hpp"
#include "sdi/rng.hpp"
#include "sdi/scenario.hpp"

namespace sdi {

namespace {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

BuiltScenario prepare(const ScenarioConfig& cfg, const RunOptions& opt) {
    BuiltScenario built = build_scenario(cfg);
    if (opt.seed) built.run.seed = *opt.seed;
    if (opt.out_dir) built.run.out_dir = *opt.out_dir;
    ensure_dir(built.run.out_dir);
    return built;
}

// --- ensemble binary format -------------------------------------------------
// "SDIE", version u8, has_selections u8, reserved u16, dE i32, dH i32,
// lag_n i64, lag_steps i64, dt f64, T f64, steps i64, paths i64, seed u64,
// scenario_hash u64; then trajectories, then selections when present.
// Host (little-endian) byte order.

constexpr char kMagic[4] = {'S', 'D', 'I', 'E'};

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_ensemble(const PathEnsemble& e, const std::string& path) {
    std::ofstream out = open_out(path);
    out.write(kMagic, 4);
    put<std::uint8_t>(out, 1);
    put<std::uint8_t>(out, e.has_selections ? 1 : 0);
    put<std::uint16_t>(out, 0);
    put<std::int32_t>(out, e.dE);
    put<std::int32_t>(out, e.dH);
    put<std::int64_t>(out, e.lag_n);
    put<std::int64_t>(out, e.lag_steps);
    put<double>(out, e.dt);
    put<double>(out, e.T);
    put<std::int64_t>(out, e.steps);
    put<std::int64_t>(out, e.paths);
    put<std::uint64_t>(out, e.seed);
    put<std::uint64_t>(out, e.scenario_hash);
    out.write(reinterpret_cast<const char*>(e.trajectories.data()),
              static_cast<std::streamsize>(e.trajectories.size() * sizeof(double)));
    if (e.has_selections) {
        out.write(reinterpret_cast<const char*>(e.selections_f.data()),
                  static_cast<std::streamsize>(e.selections_f.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(e.selections_g.data()),
                  static_cast<std::streamsize>(e.selections_g.size() * sizeof(double)));
    }
    if (!out) throw IoError("short write to " + path);
}

PathEnsemble read_ensemble(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError(path + " is not an ensemble file");
    std::uint8_t version = 0, has_sel = 0;
    std::uint16_t reserved = 0;
    get(in, version);
    get(in, has_sel);
    get(in, reserved);
    if (version != 1) throw IoError(path + ": unsupported format version");
    PathEnsemble e;
    std::int32_t dE = 0, dH = 0;
    get(in, dE);
    get(in, dH);
    get(in, e.lag_n);
    get(in, e.lag_steps);
    get(in, e.dt);
    get(in, e.T);
    get(in, e.steps);
    get(in, e.paths);
    get(in, e.seed);
    get(in, e.scenario_hash);
    e.dE = dE;
    e.dH = dH;
    if (!in || e.dE < 1 || e.dH < 1 || e.steps < 1 || e.paths < 1)
        throw IoError(path + ": corrupt ensemble header");
    e.trajectories.resize(static_cast<std::size_t>(e.paths) * (e.steps + 1) * e.dE);
    in.read(reinterpret_cast<char*>(e.trajectories.data()),
            static_cast<std::streamsize>(e.trajectories.size() * sizeof(double)));
    e.has_selections = has_sel != 0;
    if (e.has_selections) {
        e.selections_f.resize(static_cast<std::size_t>(e.paths) * e.steps * e.dE);
        e.selections_g.resize(static_cast<std::size_t>(e.paths) * e.steps * e.dE * e.dH);
        in.read(reinterpret_cast<char*>(e.selections_f.data()),
                static_cast<std::streamsize>(e.selections_f.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(e.selections_g.data()),
                static_cast<std::streamsize>(e.selections_g.size() * sizeof(double)));
    }
    if (!in) throw IoError(path + ": truncated ensemble payload");
    return e;
}

void write_summary_csv(const PathEnsemble& e, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "# scenario " << hash_hex(e.scenario_hash) << "\n";
    out << "t,coord,mean,var\n";
    for (std::int64_t k = 0; k <= e.steps; ++k) {
        for (int c = 0; c < e.dE; ++c) {
            CompensatedSum sum;
            for (std::int64_t p = 0; p < e.paths; ++p) sum.add(e.state(p, k)[c]);
            const double mean = sum.value() / static_cast<double>(e.paths);
            CompensatedSum sq;
            for (std::int64_t p = 0; p < e.paths; ++p) {
                const double d = e.state(p, k)[c] - mean;
                sq.add(d * d);
            }
            const double var =
                e.paths > 1 ? sq.value() / static_cast<double>(e.paths - 1) : 0.0;
            out << fmt_double(static_cast<double>(k) * e.dt) << "," << c << ","
                << fmt_double(mean) << "," << fmt_double(var) << "\n";
        }
    }
}

double initial_moment(const PathEnsemble& e, double p) {
    CompensatedSum sum;
    for (std::int64_t pth = 0; pth < e.paths; ++pth)
        sum.add(std::pow(e.state(pth, 0).norm(), p));
    return sum.value() / static_cast<double>(e.paths);
}

}  // namespace

void run_simulate(const ScenarioConfig& cfg, const RunOptions& opt) {
    BuiltScenario built = prepare(cfg, opt);
    std::int64_t n = built.run.n;
    if (n == 0) {
        if (built.run.n_ladder.empty())
            throw ConfigError("simulate requires [scheme] n (or a nonempty n_ladder)");
        n = built.run.n_ladder.front();
    }
    const PathEnsemble e = tonelli_step_ensemble(built.scenario, n, built.run.dt,
                                                 built.run.paths, built.run.seed, opt.threads);
    write_ensemble(e, join(built.run.out_dir, "ensemble_" + std::to_string(n) + ".bin"));
    write_summary_csv(e, join(built.run.out_dir, "summary.csv"));
}

void run_convergence(const ScenarioConfig& cfg, const RunOptions& opt) {
    BuiltScenario built = prepare(cfg, opt);
    if (built.run.n_ladder.empty())
        throw ConfigError("convergence requires a nonempty [scheme] n_ladder");
    InclusionScenario& sc = built.scenario;
    sc.store_selections = true;  // residuals need the audit trail
    const RunParameters& run = built.run;

    DiagnosticsReport report;
    report.scenario_hash = sc.scenario_hash;
    report.p = sc.hyp.p;
    report.ladder = run.n_ladder;

    std::vector<PathEnsemble> ensembles;
    ensembles.reserve(run.n_ladder.size());
    std::vector<double> integral_moments;
    for (std::int64_t n : run.n_ladder) {
        PathEnsemble e = tonelli_step_ensemble(sc, n, run.dt, run.paths, run.seed, opt.threads);
        const std::vector<double> z = residual_Z(sc, e, opt.threads);
        const ResidualStats stats = residual_stats(e, z);
        report.residual_table.push_back({n, stats.mean_terminal.value,
                                         stats.mean_terminal.std_error, stats.p90_terminal});
        integral_moments.push_back(integral_moment(e, sc.hyp.p).value);
        ensembles.push_back(std::move(e));
    }

    report.sup_moment_p = sup_moment(ensembles.back(), sc.hyp.p);
    report.aldous_table = aldous_statistic(ensembles.back(), run.deltas, run.aldous_eta);

    const std::size_t m = ensembles.size();
    report.bl_matrix.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const double d = bl_distance(ensembles[i], ensembles[j], run.bl_anchors, run.seed);
            report.bl_matrix[i][j] = d;
            report.bl_matrix[j][i] = d;
        }

    report.coverage = noncompactness_proxy(ensembles, run.radius_grid, run.max_anchors);

    // Stochastic-convolution constant on a reference unit step process.
    StepProcess ref;
    ref.times = {0.0};
    ref.values = {Mat::Ones(sc.dE, sc.dH)};
    const ConvolutionCheck conv = convolution_inequality_check(
        sc.op, ref, sc.hyp.p, run.conv_t_ladder, run.conv_paths, run.seed ^ 0xC011C0ULL,
        run.conv_dt, sc.dH, opt.threads);
    report.conv_constant_fit = conv.fit_Cp;
    report.conv_stable = conv.stable;

    // A-priori moment bound with the constant assembled from the envelope,
    // the growth constant and the fitted convolution constant.
    const GrowthEnvelope env = growth_envelope(sc.op, sc.T, 64);
    const double e_xi_p = initial_moment(ensembles.front(), sc.hyp.p);
    const GronwallBound gb =
        gronwall_bound(sc.hyp.p, env.C_B(sc.T), e_xi_p, sc.hyp.eta, conv.fit_Cp, sc.T);
    report.gronwall_c = gb.c;
    report.gronwall_log_bound = gb.log_bound;
    const double max_lhs = *std::max_element(integral_moments.begin(), integral_moments.end());
    report.gronwall_log_lhs = std::log(std::max(max_lhs, 1e-300));
    report.gronwall_pass = report.gronwall_log_lhs <= std::log(2.0) + gb.log_bound;

    bool residual_decreasing = true;
    for (std::size_t i = 1; i < report.residual_table.size(); ++i)
        if (!(report.residual_table[i].mean < report.residual_table[i - 1].mean))
            residual_decreasing = false;
    report.verdicts = {{"residual_strictly_decreasing", residual_decreasing},
                       {"gronwall_bound", report.gronwall_pass},
                       {"convolution_constant_stable", conv.stable}};

    // convergence.csv
    std::ofstream out = open_out(join(run.out_dir, "convergence.csv"));
    out << "# scenario " << hash_hex(sc.scenario_hash) << "\n";
    out << "n,dt,paths,seed,res_mean,res_p90,bl_to_prev,sup_moment_p\n";
    for (std::size_t i = 0; i < m; ++i) {
        const auto& row = report.residual_table[i];
        out << row.n << "," << fmt_double(run.dt) << "," << run.paths << "," << run.seed << ",";
        out << fmt_double(row.mean) << "," << fmt_double(row.p90) << ",";
        if (i > 0) out << fmt_double(report.bl_matrix[i - 1][i]);
        out << "," << fmt_double(sup_moment(ensembles[i], sc.hyp.p).value) << "\n";
    }
    out.close();

    write_report_csv(report, join(run.out_dir, "report.csv"));
    write_report_json(report, join(run.out_dir, "report.json"));
}

VerifySummary run_verify(const ScenarioConfig& cfg, const RunOptions& opt) {
    BuiltScenario built = prepare(cfg, opt);
    const InclusionScenario& sc = built.scenario;
    const RunParameters& run = built.run;

    struct Row {
        std::string name;
        bool pass;
        std::string detail;
    };
    std::vector<Row> rows;

    {  // growth envelope, validated on a 10x finer grid than the fit
        const GrowthEnvelope env = growth_envelope(sc.op, sc.T, 64);
        double worst = 0.0;
        for (int i = 0; i <= 640; ++i) {
            const double t = sc.T * static_cast<double>(i) / 640.0;
            const double norm = operator_norm(sc.op.exp_tA(t));
            worst = std::max(worst, norm / env.bound(t));
        }
        rows.push_back({"ha_envelope", worst <= 1.01,
                        "M=" + fmt_double(env.M) + "; omega=" + fmt_double(env.omega) +
                            "; worst_ratio=" + fmt_double(worst)});
    }

    // Deterministic sample clouds.
    const std::uint64_t sseed = run.seed ^ 0x5645524946ULL;
    std::vector<Sample> samples;
    std::vector<SamplePair> pairs;
    for (int i = 0; i < run.hyp_samples; ++i) {
        Sample s;
        s.t = sc.T * counter_uniform(sseed, static_cast<std::uint64_t>(i), 0, 0,
                                     philox::kDirections);
        s.x = Vec(sc.dE);
        SamplePair pr;
        pr.t = s.t;
        pr.x = Vec(sc.dE);
        pr.y = Vec(sc.dE);
        for (int c = 0; c < sc.dE; ++c) {
            auto u = [&](std::uint64_t step) {
                return counter_uniform(sseed, static_cast<std::uint64_t>(i), step,
                                       static_cast<uint32_t>(c), philox::kDirections);
            };
            s.x[c] = run.box_halfwidth * (2.0 * u(1) - 1.0);
            pr.x[c] = run.box_halfwidth * (2.0 * u(2) - 1.0);
            pr.y[c] = run.box_halfwidth * (2.0 * u(3) - 1.0);
        }
        samples.push_back(std::move(s));
        pairs.push_back(std::move(pr));
    }

    {
        const GrowthReport gf = check_growth(sc.F, sc.hyp, samples);
        rows.push_back({"hfg_growth_F", gf.pass,
                        "worst_ratio=" + fmt_double(gf.worst_ratio) +
                            "; violations=" + std::to_string(gf.violations)});
        const GrowthReport gg = check_growth(sc.G, sc.hyp, samples);
        rows.push_back({"hfg_growth_G", gg.pass,
                        "worst_ratio=" + fmt_double(gg.worst_ratio) +
                            "; violations=" + std::to_string(gg.violations)});
        const ModulusReport mf = check_modulus(sc.F, sc.hyp, pairs);
        rows.push_back({"hfg_modulus_F", mf.pass,
                        "worst_ratio=" + fmt_double(mf.worst_ratio) +
                            "; violations=" + std::to_string(mf.violations)});
        const ModulusReport mg = check_modulus(sc.G, sc.hyp, pairs);
        rows.push_back({"hfg_modulus_G", mg.pass,
                        "worst_ratio=" + fmt_double(mg.worst_ratio) +
                            "; violations=" + std::to_string(mg.violations)});
    }

    {
        const double u_max =
            std::pow(2.0 * run.box_halfwidth * std::sqrt(static_cast<double>(sc.dE)), sc.hyp.p);
        const ModulusShapeReport shape = check_modulus_shape(sc.hyp.modulus, sc.T, 8, 64, u_max);
        const bool pass = shape.nondecreasing && shape.convex && shape.zero_at_zero && shape.finite;
        std::string detail = std::string("nondecreasing=") + (shape.nondecreasing ? "1" : "0") +
                             "; convex=" + (shape.convex ? "1" : "0") +
                             "; zero_at_zero=" + (shape.zero_at_zero ? "1" : "0") +
                             "; finite=" + (shape.finite ? "1" : "0");
        rows.push_back({"hfg_modulus_shape", pass, detail});
    }

    {  // initial condition: p > 2 enforced structurally; sample the p-moment
        const InitialSampler xi(sc);
        CompensatedSum sum;
        const std::int64_t probe = std::min<std::int64_t>(run.paths, 1000);
        for (std::int64_t i = 0; i < probe; ++i) sum.add(std::pow(xi(run.seed, i).norm(), sc.hyp.p));
        const double exp_p = sum.value() / static_cast<double>(probe);
        rows.push_back({"hxi_moment", std::isfinite(exp_p),
                        "p=" + fmt_double(sc.hyp.p) + "; E_norm_p=" + fmt_double(exp_p)});
    }

    {
        const OsgoodResult os = osgood_iterate(sc.hyp.modulus, run.osgood_k, sc.T, run.osgood_R0,
                                               run.osgood_grid, run.osgood_iters);
        rows.push_back({"osgood", os.verdict == OsgoodVerdict::osgood_pass,
                        std::string("verdict=") + to_string(os.verdict) +
                            "; limit_sup=" + fmt_double(os.limit_sup) +
                            "; R0=" + fmt_double(os.working_R0) +
                            (os.inflated ? "; inflated=1" : "; inflated=0")});
    }

    std::ofstream out = open_out(join(run.out_dir, "hypotheses.csv"));
    out << "# scenario " << hash_hex(sc.scenario_hash) << "\n";
    out << "hypothesis,verdict,detail\n";
    VerifySummary summary;
    for (const Row& r : rows) {
        out << r.name << "," << (r.pass ? "pass" : "fail") << "," << r.detail << "\n";
        if (!r.pass && summary.pass) {
            summary.pass = false;
            summary.failing = r.name;
        }
    }
    return summary;
}

void run_plotdata(const std::string& input_path, const std::string& out_dir) {
    ensure_dir(out_dir);
    std::ifstream probe(input_path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + input_path);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    probe.close();

    if (std::memcmp(magic, kMagic, 4) == 0) {
        const PathEnsemble e = read_ensemble(input_path);
        for (int c = 0; c < e.dE; ++c) {
            std::ofstream mean_out =
                open_out(join(out_dir, "mean_vs_t_c" + std::to_string(c) + ".dat"));
            std::ofstream var_out =
                open_out(join(out_dir, "var_vs_t_c" + std::to_string(c) + ".dat"));
            for (std::int64_t k = 0; k <= e.steps; ++k) {
                CompensatedSum sum;
                for (std::int64_t p = 0; p < e.paths; ++p) sum.add(e.state(p, k)[c]);
                const double mean = sum.value() / static_cast<double>(e.paths);
                CompensatedSum sq;
                for (std::int64_t p = 0; p < e.paths; ++p) {
                    const double d = e.state(p, k)[c] - mean;
                    sq.add(d * d);
                }
                const double var =
                    e.paths > 1 ? sq.value() / static_cast<double>(e.paths - 1) : 0.0;
                const double t = static_cast<double>(k) * e.dt;
                mean_out << fmt_double(t) << " " << fmt_double(mean) << "\n";
                var_out << fmt_double(t) << " " << fmt_double(var) << "\n";
            }
        }
        return;
    }

    // Otherwise expect the structured JSON report.
    std::ifstream in(input_path, std::ios::binary);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError(input_path + ": neither an ensemble file nor a report (" + e.what() + ")");
    }

    if (j.contains("residual_table") && !j["residual_table"].empty()) {
        auto rows = j["residual_table"];
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            return a["n"].template get<std::int64_t>() < b["n"].template get<std::int64_t>();
        });
        std::ofstream out = open_out(join(out_dir, "residual_vs_n.dat"));
        for (const auto& row : rows)
            out << row["n"].get<std::int64_t>() << " " << fmt_double(row["mean"].get<double>())
                << " " << fmt_double(row["std_error"].get<double>()) << "\n";
    } else {
        std::cerr << "plotdata: no residual table in report, residual_vs_n.dat omitted\n";
    }

    if (j.contains("aldous") && !j["aldous"].empty()) {
        auto rows = j["aldous"];
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            return a["delta"].template get<double>() < b["delta"].template get<double>();
        });
        std::ofstream out = open_out(join(out_dir, "aldous_vs_delta.dat"));
        for (const auto& row : rows)
            out << fmt_double(row["delta"].get<double>()) << " "
                << fmt_double(row["estimate"].get<double>()) << "\n";
    } else {
        std::cerr << "plotdata: no Aldous table in report, aldous_vs_delta.dat omitted\n";
    }

    if (j.contains("bl_matrix") && j.contains("ladder") && j["ladder"].size() >= 2) {
        const auto ladder = j["ladder"].get<std::vector<std::int64_t>>();
        const auto matrix = j["bl_matrix"].get<std::vector<std::vector<double>>>();
        std::ofstream out = open_out(join(out_dir, "bl_vs_n.dat"));
        for (std::size_t i = 1; i < ladder.size(); ++i)
            out << ladder[i] << " " << fmt_double(matrix[i - 1][i]) << "\n";
    } else {
        std::cerr << "plotdata: no ladder distances in report, bl_vs_n.dat omitted\n";
    }

    if (j.contains("coverage") && !j["coverage"].empty()) {
        for (const auto& curve : j["coverage"]) {
            const std::string label = curve["label"].get<std::string>();
            std::ofstream out = open_out(join(out_dir, "uncovered_" + label + ".dat"));
            const auto radii = curve["radii"].get<std::vector<double>>();
            const auto frac = curve["uncovered"].get<std::vector<double>>();
            for (std::size_t i = 0; i < radii.size(); ++i)
                out << fmt_double(radii[i]) << " " << fmt_double(frac[i]) << "\n";
        }
    } else {
        std::cerr << "plotdata: no coverage curves in report, uncovered_*.dat omitted\n";
    }
}

}  // namespace sdi
