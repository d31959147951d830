#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wgf/errors.hpp"
#include "wgf/experiments.hpp"
#include "wgf/rng.hpp"
#include "test_support.hpp"

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* kSmallRun = R"({
    "grid": {"cells": 100},
    "time": {"horizon": 0.1, "steps": 10},
    "sampling": {"batches": 10}
})";

} // namespace

TEST_CASE("scaled differences are nodewise and reject grid mismatches") {
    wgf::Grid1D g{5.0, 40};
    wgf::TimeGrid tg{0.2, 4};
    wgf::FieldGrid a(g, tg), b(g, tg);
    for (int i = 0; i <= tg.I; ++i)
        for (int j = 0; j <= g.J; ++j) {
            a.at(i, j) = 0.1 * i + 0.01 * j;
            b.at(i, j) = 0.05 * i;
        }
    wgf::FieldGrid d = wgf::scaled_difference(a, b, 2.0);
    CHECK(d.at(3, 7) == doctest::Approx(2.0 * (a.at(3, 7) - b.at(3, 7))).epsilon(1e-15));
    wgf::FieldGrid zero = wgf::scaled_difference(a, a, 5.0);
    for (int i = 0; i <= tg.I; ++i)
        for (int j = 0; j <= g.J; ++j) CHECK(zero.at(i, j) == 0.0);

    wgf::FieldGrid other(wgf::Grid1D{5.0, 41}, tg);
    CHECK_THROWS_AS(wgf::scaled_difference(a, other, 1.0), wgf::GridMismatch);
}

TEST_CASE("discretization variance limit evaluates its closed form") {
    CHECK(wgf::prop53_limit_variance(1.0) ==
          doctest::Approx(0.3828328458575135).epsilon(1e-14));
    // t/6 + (1 - e^{-2t})/4 vanishes with t.
    CHECK(wgf::prop53_limit_variance(0.01) < 0.02);
    CHECK(wgf::prop53_limit_variance(0.01) ==
          doctest::Approx(0.01 / 6.0 + 0.25 * (1.0 - std::exp(-0.02))).epsilon(1e-14));
}

TEST_CASE("sampled discretization variance approaches the limit") {
    wgf::Prop53Row row = wgf::prop53_variance(1.0, 0.01, 600, 5);
    CHECK(row.replications == 600);
    CHECK(row.n == doctest::Approx(100.0));
    double limit = wgf::prop53_limit_variance(1.0);
    MESSAGE("variance ", row.variance, " limit ", limit);
    CHECK(row.variance > 0.7 * limit);
    CHECK(row.variance < 1.3 * limit);

    wgf::Prop53Row again = wgf::prop53_variance(1.0, 0.01, 600, 5);
    CHECK(again.variance == row.variance);

    auto rows = wgf::run_prop53(1.0, {10.0, 20.0}, 50, 6);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].delta == doctest::Approx(0.1));
    CHECK(rows[1].delta == doctest::Approx(0.05));
}

TEST_CASE("offline estimates standardize to a normal sample") {
    wgf::CltResult r = wgf::run_clt_offline(0.0, 1.0, 400, 300, 7);
    REQUIRE(int(r.z.size()) == 300);
    CHECK(r.ks_critical_001 == doctest::Approx(1.62762 / std::sqrt(300.0)).epsilon(1e-12));
    MESSAGE("ks ", r.ks_stat, " critical ", r.ks_critical_001);
    CHECK(r.ks_stat < r.ks_critical_001);
    CHECK(r.pass);
}

TEST_CASE("field correlation is one on itself and minus one on its negation") {
    wgf::Grid1D g{5.0, 50};
    wgf::TimeGrid tg{0.5, 20};
    wgf::FieldGrid a(g, tg), b(g, tg);
    wgf::RngStream rng(3, 0);
    for (int i = 0; i <= tg.I; ++i)
        for (int j = 0; j <= g.J; ++j) {
            a.at(i, j) = rng.normal();
            b.at(i, j) = -a.at(i, j);
        }
    CHECK(wgf::field_correlation(a, a, 0.1, 0.5, 3.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(wgf::field_correlation(a, b, 0.1, 0.5, 3.0) ==
          doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("figure pipeline runs deterministically on a reduced setup") {
    wgf::RunConfig cfg = wgf::parse_config(kSmallRun);
    wgf::FigureRun run = wgf::run_figure_pipeline(cfg, 101);
    CHECK(run.estimates.steps() == cfg.time.I);
    CHECK(run.rho_hat.time.I == cfg.time.I);
    for (int i = 0; i <= cfg.time.I; ++i)
        for (int j = 0; j <= cfg.grid.J; ++j) {
            CHECK(std::isfinite(run.v_hat.at(i, j)));
            CHECK(std::isfinite(run.v1.at(i, j)));
        }
    // Scaled difference ties the three density fields together.
    double scale = std::sqrt(cfg.sampling.batch_size / cfg.jko.delta);
    CHECK(run.v_hat.at(5, 50) ==
          doctest::Approx(scale * (run.rho_hat.at(5, 50) - run.rho_ref.at(5, 50)))
              .epsilon(1e-12));

    wgf::FigureRun rerun = wgf::run_figure_pipeline(cfg, 101);
    for (int i = 0; i <= cfg.time.I; ++i)
        for (int j = 0; j <= cfg.grid.J; ++j)
            CHECK(rerun.v_hat.at(i, j) == run.v_hat.at(i, j));
}

TEST_CASE("experiment artifacts are manifest-complete and reproducible") {
    wgf::RunConfig cfg = wgf::parse_config(kSmallRun);
    auto dir = testutil::temp_dir("exp_fig1");
    wgf::Manifest m = wgf::run_experiment(cfg, dir, 9);
    CHECK(m.experiment == "fig1_density");
    CHECK(m.seed == 9);
    REQUIRE(!m.files.empty());
    CHECK(std::filesystem::exists(dir / "manifest.json"));

    std::set<std::string> listed;
    for (const auto& f : m.files) {
        listed.insert(f.name);
        std::string bytes = read_file(dir / f.name);
        char hex[32];
        std::snprintf(hex, sizeof hex, "%016llx",
                      (unsigned long long)wgf::fnv1a64(bytes));
        CHECK(f.hash == hex);
    }
    // Every artifact on disk except the manifest itself is listed.
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name == "manifest.json") continue;
        CHECK(listed.count(name) == 1);
    }

    nlohmann::json mj = nlohmann::json::parse(read_file(dir / "manifest.json"));
    CHECK(mj.at("experiment") == "fig1_density");
    CHECK(mj.at("files").size() == m.files.size());

    auto dir2 = testutil::temp_dir("exp_fig1_rerun");
    wgf::Manifest m2 = wgf::run_experiment(cfg, dir2, 9);
    REQUIRE(m2.files.size() == m.files.size());
    for (size_t k = 0; k < m.files.size(); ++k) {
        CHECK(m2.files[k].name == m.files[k].name);
        CHECK(m2.files[k].hash == m.files[k].hash);
        CHECK(read_file(dir2 / m2.files[k].name) == read_file(dir / m.files[k].name));
    }
}

TEST_CASE("remaining experiment ids produce their artifacts") {
    struct Case {
        const char* id;
        const char* extra;
    };
    const Case cases[] = {
        {"prop53_variance", R"("replications": 40, "n_list": [10, 20], "t": 0.5)"},
        {"clt_offline", R"("replications": 60, "n_list": [200])"},
        {"bw_convergence", R"("replications": 1)"},
    };
    for (const Case& c : cases) {
        CAPTURE(c.id);
        std::ostringstream text;
        text << R"({"grid": {"cells": 80}, "time": {"horizon": 0.1, "steps": 5},)"
             << R"( "sampling": {"batches": 5},)"
             << R"( "experiment": {"id": ")" << c.id << R"(", )" << c.extra << "}}";
        wgf::RunConfig cfg = wgf::parse_config(text.str());
        auto dir = testutil::temp_dir(std::string("exp_") + c.id);
        wgf::Manifest m = wgf::run_experiment(cfg, dir, 13);
        CHECK(m.experiment == c.id);
        CHECK(!m.files.empty());
        CHECK(std::filesystem::exists(dir / "manifest.json"));
        for (const auto& f : m.files) CHECK(std::filesystem::exists(dir / f.name));
    }
}

TEST_CASE("manifests serialize empty file lists") {
    auto dir = testutil::temp_dir("manifest_empty");
    wgf::Manifest m;
    m.experiment = "none";
    m.seed = 1;
    m.config_hash = "00";
    wgf::write_manifest(dir / "manifest.json", m);
    nlohmann::json mj = nlohmann::json::parse(read_file(dir / "manifest.json"));
    CHECK(mj.at("files").empty());
    CHECK(mj.at("experiment") == "none");
}
