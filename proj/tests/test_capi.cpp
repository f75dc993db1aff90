#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "sdi/capi.h"

namespace fs = std::filesystem;

namespace {

std::string data_file(const std::string& name) {
    const char* dir = std::getenv("SDI_TEST_DATA");
    REQUIRE(dir != nullptr);
    return (fs::path(dir) / name).string();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("sdi_capi_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct Handle {
    sdi_scenario* sc = nullptr;
    ~Handle() { sdi_scenario_close(sc); }
};

}  // namespace

TEST_CASE("open reports missing files and bad keys with attribution") {
    Handle h;
    CHECK(sdi_scenario_open("/nonexistent/path.cfg", &h.sc) == SDI_IO_ERROR);
    CHECK(h.sc == nullptr);

    CHECK(sdi_scenario_open(data_file("bad_key.cfg").c_str(), &h.sc) == SDI_CONFIG_ERROR);
    CHECK(std::string(sdi_last_error()).find("slector") != std::string::npos);
}

TEST_CASE("simulate writes the documented artifacts") {
    Handle h;
    REQUIRE(sdi_scenario_open(data_file("mini_ou.cfg").c_str(), &h.sc) == SDI_OK);
    REQUIRE(sdi_scenario_set_threads(h.sc, 2) == SDI_OK);
    const fs::path dir = fresh_dir("simulate");
    REQUIRE(sdi_run_simulate(h.sc, dir.string().c_str()) == SDI_OK);
    CHECK(fs::exists(dir / "ensemble_16.bin"));
    CHECK(fs::exists(dir / "summary.csv"));

    const std::string summary = slurp(dir / "summary.csv");
    CHECK(summary.find("t,coord,mean,var") != std::string::npos);
    CHECK(summary.rfind("# scenario ", 0) == 0);

    // Ensemble files feed plotdata.
    const fs::path plots = fresh_dir("plot_bin");
    REQUIRE(sdi_run_plotdata((dir / "ensemble_16.bin").string().c_str(),
                             plots.string().c_str()) == SDI_OK);
    CHECK(fs::exists(plots / "mean_vs_t_c0.dat"));
    CHECK(fs::exists(plots / "var_vs_t_c0.dat"));

    CHECK(sdi_run_plotdata((dir / "missing.bin").string().c_str(), plots.string().c_str()) ==
          SDI_IO_ERROR);
}

TEST_CASE("convergence output is byte-identical across worker counts") {
    Handle h1;
    REQUIRE(sdi_scenario_open(data_file("mini_ou.cfg").c_str(), &h1.sc) == SDI_OK);
    REQUIRE(sdi_scenario_set_threads(h1.sc, 1) == SDI_OK);
    const fs::path d1 = fresh_dir("conv1");
    REQUIRE(sdi_run_convergence(h1.sc, d1.string().c_str()) == SDI_OK);

    Handle h2;
    REQUIRE(sdi_scenario_open(data_file("mini_ou.cfg").c_str(), &h2.sc) == SDI_OK);
    REQUIRE(sdi_scenario_set_threads(h2.sc, 2) == SDI_OK);
    const fs::path d2 = fresh_dir("conv2");
    REQUIRE(sdi_run_convergence(h2.sc, d2.string().c_str()) == SDI_OK);

    CHECK(slurp(d1 / "convergence.csv") == slurp(d2 / "convergence.csv"));
    CHECK(slurp(d1 / "report.csv") == slurp(d2 / "report.csv"));
    CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));

    const std::string csv = slurp(d1 / "convergence.csv");
    CHECK(csv.find("n,dt,paths,seed,res_mean,res_p90,bl_to_prev,sup_moment_p") !=
          std::string::npos);

    const fs::path plots = fresh_dir("plot_report");
    REQUIRE(sdi_run_plotdata((d1 / "report.json").string().c_str(), plots.string().c_str()) ==
            SDI_OK);
    CHECK(fs::exists(plots / "residual_vs_n.dat"));
    CHECK(fs::exists(plots / "aldous_vs_delta.dat"));
    CHECK(fs::exists(plots / "bl_vs_n.dat"));
}

TEST_CASE("seed override changes the artifacts deterministically") {
    Handle h;
    REQUIRE(sdi_scenario_open(data_file("mini_ou.cfg").c_str(), &h.sc) == SDI_OK);
    const fs::path base = fresh_dir("seed_base");
    REQUIRE(sdi_run_simulate(h.sc, base.string().c_str()) == SDI_OK);

    REQUIRE(sdi_scenario_set_seed(h.sc, 12345) == SDI_OK);
    const fs::path other = fresh_dir("seed_other");
    REQUIRE(sdi_run_simulate(h.sc, other.string().c_str()) == SDI_OK);
    CHECK(slurp(base / "summary.csv") != slurp(other / "summary.csv"));

    REQUIRE(sdi_scenario_set_seed(h.sc, 3) == SDI_OK);  // the config's own seed
    const fs::path again = fresh_dir("seed_again");
    REQUIRE(sdi_run_simulate(h.sc, again.string().c_str()) == SDI_OK);
    CHECK(slurp(base / "summary.csv") == slurp(again / "summary.csv"));
}

TEST_CASE("verify passes the benchmark and flags the square-root modulus") {
    Handle ok;
    REQUIRE(sdi_scenario_open(data_file("mini_ou.cfg").c_str(), &ok.sc) == SDI_OK);
    const fs::path d1 = fresh_dir("verify_ok");
    CHECK(sdi_run_verify(ok.sc, d1.string().c_str()) == SDI_OK);
    const std::string rows = slurp(d1 / "hypotheses.csv");
    CHECK(rows.find("hypothesis,verdict,detail") != std::string::npos);
    CHECK(rows.find("osgood,pass") != std::string::npos);

    Handle bad;
    REQUIRE(sdi_scenario_open(data_file("osgood_sqrt.cfg").c_str(), &bad.sc) == SDI_OK);
    const fs::path d2 = fresh_dir("verify_fail");
    CHECK(sdi_run_verify(bad.sc, d2.string().c_str()) == SDI_HYPOTHESIS_FAIL);
    const std::string failing = slurp(d2 / "hypotheses.csv");
    CHECK(failing.find("osgood,fail") != std::string::npos);
    CHECK(std::string(sdi_last_error()).find("hypothesis failed") != std::string::npos);
}

TEST_CASE("a ladder of length one yields one row with an empty distance field") {
    // Derive a single-entry ladder config from the test scenario.
    std::ifstream in(data_file("mini_ou.cfg"));
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string needle = "n_ladder = [2, 4, 8]";
    text.replace(text.find(needle), needle.size(), "n_ladder = [4]");
    const fs::path dir = fresh_dir("ladder1");
    const fs::path cfg = dir / "single.cfg";
    std::ofstream(cfg) << text;

    Handle h;
    REQUIRE(sdi_scenario_open(cfg.string().c_str(), &h.sc) == SDI_OK);
    REQUIRE(sdi_run_convergence(h.sc, dir.string().c_str()) == SDI_OK);

    std::ifstream csv(dir / "convergence.csv");
    std::string comment, header, row, extra;
    std::getline(csv, comment);
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(!std::getline(csv, extra));  // exactly one data row
    CHECK(row.rfind("4,", 0) == 0);
    // bl_to_prev is the empty seventh field.
    std::size_t commas = 0, pos = 0, empty_start = 0;
    for (std::size_t i = 0; i < row.size(); ++i)
        if (row[i] == ',') {
            ++commas;
            if (commas == 6) empty_start = i + 1;
            if (commas == 7) pos = i;
        }
    CHECK(commas == 7);
    CHECK(pos == empty_start);
}

TEST_CASE("plotdata omits files for missing report sections") {
    const fs::path dir = fresh_dir("plot_partial");
    const fs::path report = dir / "partial.json";
    std::ofstream(report) << R"({"residual_table":[{"n":2,"mean":0.5,"std_error":0.01,"p90":0.7}]})";
    const fs::path out = dir / "plots";
    REQUIRE(sdi_run_plotdata(report.string().c_str(), out.string().c_str()) == SDI_OK);
    CHECK(fs::exists(out / "residual_vs_n.dat"));
    CHECK_FALSE(fs::exists(out / "aldous_vs_delta.dat"));
    CHECK_FALSE(fs::exists(out / "bl_vs_n.dat"));
}

TEST_CASE("version string is available") {
    CHECK(std::string(sdi_version()) == "0.1.0");
}
