// Copyright 2026 The pqd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pqd/analysis.hpp"
#include "pqd/config.hpp"
#include "pqd/sweep.hpp"

namespace {

using namespace pqd;
namespace fs = std::filesystem;

std::string slurp(const fs::path &p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

fs::path scratch_dir(const std::string &name) {
    fs::path d = fs::temp_directory_path() / ("pqd_test_lab_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

SweepOptions workers(std::size_t n) {
    SweepOptions o;
    o.workers = n;
    return o;
}

SweepConfig small_config() {
    SweepConfig c;
    c.code = "five_qubit";
    c.lambdas = {0.02, 0.05, 0.1};
    c.realizations = 4;
    c.samples = 100;
    c.decoders = {DecoderKind::naive, DecoderKind::qec};
    c.bases = {Basis::X, Basis::Z};
    c.seed = 7;
    return c;
}

// Power law eps = a * lambda^k for several seeds, scattered multiplicatively.
SweepResult synthetic(double a, double k, std::size_t seeds, const std::string &code = "five_qubit") {
    SweepResult out;
    for (double lambda : log_grid(1e-3, 1e-1, 9)) {
        for (std::size_t s = 0; s < seeds; ++s) {
            double scatter = 1.0 + 0.1 * (static_cast<double>(s) - 0.5 * static_cast<double>(seeds - 1));
            out.rows.push_back({code, "naive", 'X', lambda, s + 1, a * scatter * std::pow(lambda, k), 0.0, 0.0});
        }
    }
    return out;
}

TEST(Lab, KeyValueParsing) {
    auto e = parse_key_values("# comment\ncode = steane  # trailing\n\nsamples=10\n");
    ASSERT_EQ(e.size(), 2u);
    EXPECT_EQ(e[0].key, "code");
    EXPECT_EQ(e[0].value, "steane");
    EXPECT_EQ(e[1].line, 4u);
    EXPECT_THROW(parse_key_values("code = a\ncode = b\n"), Error);
    EXPECT_THROW(parse_key_values("just words\n"), Error);
    EXPECT_THROW(parse_key_values("Bad-Key = 1\n"), Error);
}

TEST(Lab, SweepConfigParsing) {
    SweepConfig c = parse_sweep_config(
        "code = steane\nperturbation = uniform_xz\nlambda_min = 0.01\nlambda_max = 0.1\nlambda_points = 5\n"
        "realizations = 3\nsamples = 20\nnoise_p = 1\ndecoders = naive, qec, qnn\nbases = X,Z\nseed = 11\n"
        "workers = 2\nqnn_depth = 2\nqnn_topology = trans_inv\nqnn_warm_start = false\n");
    EXPECT_EQ(c.code, "steane");
    EXPECT_EQ(c.perturbation, PerturbationKind::uniform_xz);
    ASSERT_EQ(c.lambdas.size(), 5u);
    EXPECT_NEAR(c.lambdas.front(), 0.01, 1e-15);
    EXPECT_NEAR(c.lambdas.back(), 0.1, 1e-15);
    EXPECT_EQ(c.realizations, 3u);
    EXPECT_EQ(c.noise_p, 1u);
    EXPECT_EQ(c.decoders.size(), 3u);
    EXPECT_TRUE(c.uses(DecoderKind::qnn));
    EXPECT_EQ(c.bases, (std::vector<Basis>{Basis::X, Basis::Z}));
    EXPECT_EQ(c.seed, 11u);
    EXPECT_EQ(c.workers, 2u);
    EXPECT_EQ(c.qnn.depth, 2u);
    EXPECT_EQ(c.qnn.topology, Topology::trans_inv);
    EXPECT_FALSE(c.qnn.warm_start);
}

TEST(Lab, SweepConfigRejectsBadInput) {
    EXPECT_THROW(parse_sweep_config("lambdas = 0.1\nunknown_key = 3\n"), Error);
    EXPECT_THROW(parse_sweep_config("lambdas = 0.2, 0.1\n"), Error);
    EXPECT_THROW(parse_sweep_config("lambdas = -0.1, 0.1\n"), Error);
    EXPECT_THROW(parse_sweep_config("lambdas = 0.1\nsamples = many\n"), Error);
    EXPECT_THROW(parse_sweep_config("lambdas = 0.1\ndecoders = magic\n"), Error);
    EXPECT_THROW(parse_sweep_config("samples = 10\n"), Error);
    try {
        parse_sweep_config("lambdas = 0.1\n\nbogus = 1\n");
        FAIL();
    } catch (const Error &e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    SweepConfig zero = parse_sweep_config("lambdas = 0, 0.1\n");
    EXPECT_EQ(zero.lambdas.front(), 0.0);
}

TEST(Lab, LogGrid) {
    auto g = log_grid(std::pow(10.0, -2.5), 0.1, 8);
    ASSERT_EQ(g.size(), 8u);
    EXPECT_NEAR(g.front(), std::pow(10.0, -2.5), 1e-15);
    EXPECT_NEAR(g.back(), 0.1, 1e-15);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], g[1] / g[0], 1e-12);
    EXPECT_THROW(log_grid(0.0, 1.0, 3), Error);
    EXPECT_THROW(log_grid(1.0, 0.5, 3), Error);
}

TEST(Lab, CsvHeaderOnly) {
    std::ostringstream os;
    write_csv(os, SweepResult{});
    EXPECT_EQ(os.str(), std::string(kCsvHeader) + "\n");
    std::istringstream is(os.str());
    EXPECT_TRUE(read_csv(is).rows.empty());
}

TEST(Lab, CsvRoundTrip) {
    SweepResult r;
    r.rows.push_back({"five_qubit", "naive", 'X', 0.1, 123456789012345ULL, 1.0 / 3.0, 2e-17, 0.0});
    r.rows.push_back({"steane", "qec", 'Z', std::pow(10.0, -2.5), 1, 5e-300, 0.1 + 0.2, 12.5});
    r.rows.push_back({"shor", "qnn", 'Y', 0.0, 2, std::numeric_limits<double>::quiet_NaN(),
                      std::numeric_limits<double>::quiet_NaN(), 0.0});
    std::ostringstream os;
    write_csv(os, r);
    std::istringstream is(os.str());
    SweepResult back = read_csv(is);
    ASSERT_EQ(back.rows.size(), 3u);
    EXPECT_EQ(back.rows[0], r.rows[0]);
    EXPECT_EQ(back.rows[1], r.rows[1]);
    EXPECT_TRUE(back.rows[2].failed());
    std::ostringstream again;
    write_csv(again, back);
    EXPECT_EQ(again.str(), os.str());
}

TEST(Lab, CsvRejectsDamage) {
    std::string good = std::string(kCsvHeader) + "\nfive_qubit,naive,X,0.1,1,0.5,0,0\nfive_qubit,naive,X,0.2,1,0.";
    {
        std::istringstream is(good);
        EXPECT_THROW(read_csv(is), Error);
    }
    {
        std::istringstream is(good);
        EXPECT_EQ(read_csv(is, true).rows.size(), 1u);
    }
    std::istringstream header("code,decoder\n");
    EXPECT_THROW(read_csv(header), Error);
    std::istringstream basis(std::string(kCsvHeader) + "\nfive_qubit,naive,W,0.1,1,0.5,0,0\n");
    EXPECT_THROW(read_csv(basis), Error);
}

TEST(Lab, FitExactPowerLaw) {
    std::vector<double> x = log_grid(1e-3, 1e-1, 7);
    std::vector<double> y1, y2;
    for (double v : x) {
        y1.push_back(v * v * v);
        y2.push_back(2 * v * v * v);
    }
    FitWindow w{1e-3, 1e-1};
    FitReport a = fit_power_law(x, y1, w);
    FitReport b = fit_power_law(x, y2, w);
    EXPECT_NEAR(a.slope, 3.0, 1e-6);
    EXPECT_NEAR(a.intercept, 0.0, 1e-9);
    EXPECT_NEAR(b.slope, 3.0, 1e-6);
    EXPECT_NEAR(b.intercept, std::log10(2.0), 1e-9);
    EXPECT_EQ(a.points_used, 7u);
    EXPECT_LT(a.slope_stderr, 1e-9);
    EXPECT_THROW(fit_power_law(x, y1, FitWindow{0.5, 1.0}), Error);
}

TEST(Lab, FitSkipsFloorAndWindow) {
    std::vector<double> x{1e-3, 1e-2, 2e-2, 5e-2, 1e-1, 1.0};
    std::vector<double> y{0.0, 1e-8, 1.6e-7, 6.25e-6, 1e-4, 7.0};
    FitReport r = fit_power_law(x, y, FitWindow{1e-3, 0.1});
    EXPECT_EQ(r.points_used, 4u);
    EXPECT_NEAR(r.slope, 4.0, 1e-9);
}

TEST(Lab, DisorderMeanAndFit) {
    SweepResult r = synthetic(3.0, 4.0, 5);
    auto curve = disorder_mean(r, "naive", 'X');
    ASSERT_EQ(curve.size(), 9u);
    EXPECT_EQ(curve[0].count, 5u);
    EXPECT_NEAR(curve[0].mean, 3.0 * std::pow(1e-3, 4.0), 1e-20);
    EXPECT_GT(curve[0].spread, 0.0);
    FitReport f = fit_exponent(r, "naive", 'X', FitWindow{1e-3, 1e-1});
    EXPECT_NEAR(f.slope, 4.0, 1e-9);
    EXPECT_NEAR(f.intercept, std::log10(3.0), 1e-9);

    SweepResult mixed = r;
    for (const auto &row : synthetic(1.0, 2.0, 2, "steane").rows) mixed.rows.push_back(row);
    EXPECT_THROW(disorder_mean(mixed, "naive", 'X'), Error);
    EXPECT_NEAR(fit_exponent(mixed, "naive", 'X', FitWindow{1e-3, 1e-1}, "steane").slope, 2.0, 1e-9);
    EXPECT_EQ(series_keys(mixed).size(), 2u);
}

TEST(Lab, BootstrapSlopes) {
    SweepResult r = synthetic(1.0, 4.0, 6);
    auto a = bootstrap_slopes(r, "naive", 'X', FitWindow{1e-3, 1e-1}, 50, 3);
    auto b = bootstrap_slopes(r, "naive", 'X', FitWindow{1e-3, 1e-1}, 50, 3);
    ASSERT_EQ(a.size(), 50u);
    EXPECT_EQ(a, b);
    // Each realization follows the exact law, so every resample does too.
    for (double s : a) EXPECT_NEAR(s, 4.0, 1e-9);
    EXPECT_THROW(bootstrap_slopes(r, "qec", 'X', FitWindow{1e-3, 1e-1}, 5, 1), Error);
}

TEST(Lab, CollapseTransform) {
    SweepResult r = synthetic(1.0, 4.0, 3);
    auto pts = collapse_transform({r}, {{"five_qubit", 1.0}});
    auto curve = disorder_mean(r, "naive", 'X');
    ASSERT_EQ(pts.size(), curve.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_EQ(pts[i].lambda, curve[i].lambda);
        EXPECT_NEAR(pts[i].value, std::log10(curve[i].mean), 1e-12);
    }
    // Two laws with exponents 4 and 8 overlap once divided by 2 and 4.
    SweepResult other = synthetic(1.0, 8.0, 3, "steane");
    auto both = collapse_transform({r, other}, {{"five_qubit", 2.0}, {"steane", 4.0}});
    for (std::size_t i = 0; i < curve.size(); ++i) EXPECT_NEAR(both[i].value, both[i + curve.size()].value, 0.05);

    SweepResult shifted = other;
    for (auto &row : shifted.rows) row.lambda *= 2;
    EXPECT_THROW(collapse_transform({r, shifted}, {{"five_qubit", 2.0}, {"steane", 4.0}}), Error);
    EXPECT_THROW(collapse_transform({r}, {{"steane", 1.0}}), Error);
}

TEST(Lab, SvgOutput) {
    SweepResult r = synthetic(1.0, 4.0, 3);
    for (const auto &row : synthetic(1.0, 2.0, 3, "steane").rows) r.rows.push_back(row);
    FitReport f = fit_exponent(r, "naive", 'X', FitWindow{1e-3, 1e-1}, "five_qubit");
    std::ostringstream os;
    emit_svg(os, r, {{"five_qubit fit", f}}, {.title = "test"});
    std::string svg = os.str();
    auto count = [&](const std::string &needle) {
        std::size_t n = 0;
        for (auto p = svg.find(needle); p != std::string::npos; p = svg.find(needle, p + 1)) ++n;
        return n;
    };
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_EQ(count("<polyline class=\"series\""), 2u);
    EXPECT_EQ(count("class=\"fit\""), 1u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Lab, SweepAtZeroIsExact) {
    SweepConfig c = small_config();
    c.lambdas = {0.0};
    c.decoders = {DecoderKind::naive};
    c.bases = {Basis::X, Basis::Y, Basis::Z};
    SweepResult r = run_sweep(c);
    ASSERT_EQ(r.rows.size(), c.realizations * 3);
    for (const auto &row : r.rows) EXPECT_LE(row.epsilon, 1e-20);
    EXPECT_TRUE(r.errors.empty());
}

TEST(Lab, SweepRowLayout) {
    SweepConfig c = small_config();
    SweepResult r = run_sweep(c);
    ASSERT_EQ(r.rows.size(), 3u * 4u * 2u * 2u);
    // Lambda-major, then realization, decoder, basis.
    EXPECT_EQ(r.rows[0].decoder, "naive");
    EXPECT_EQ(r.rows[0].basis, 'X');
    EXPECT_EQ(r.rows[1].basis, 'Z');
    EXPECT_EQ(r.rows[2].decoder, "qec");
    EXPECT_EQ(r.rows[4].seed, realization_seed(c.seed, 1));
    // Each realization keeps its seed along the lambda grid.
    EXPECT_EQ(r.rows[16].lambda, 0.05);
    EXPECT_EQ(r.rows[16].seed, r.rows[0].seed);
    for (const auto &row : r.rows) {
        EXPECT_EQ(row.wall_ms, 0.0);
        EXPECT_GT(row.epsilon, 0.0);
    }
}

TEST(Lab, SweepIsDeterministicAcrossWorkers) {
    fs::path dir = scratch_dir("workers");
    SweepConfig c = small_config();
    c.output = (dir / "one.csv").string();
    run_sweep(c, workers(1));
    c.output = (dir / "three.csv").string();
    run_sweep(c, workers(3));
    c.output = (dir / "again.csv").string();
    run_sweep(c, workers(1));
    std::string one = slurp(dir / "one.csv");
    EXPECT_FALSE(one.empty());
    EXPECT_EQ(one, slurp(dir / "three.csv"));
    EXPECT_EQ(one, slurp(dir / "again.csv"));
    fs::remove_all(dir);
}

TEST(Lab, SweepResumesFromTruncatedFile) {
    fs::path dir = scratch_dir("resume");
    SweepConfig c = small_config();
    c.output = (dir / "full.csv").string();
    run_sweep(c);
    std::string full = slurp(c.output);
    // Cut the file mid-row, as an interrupted run would leave it.
    std::string partial = full.substr(0, full.size() * 3 / 5);
    ASSERT_NE(partial.back(), '\n');
    c.output = (dir / "partial.csv").string();
    {
        std::ofstream os(c.output, std::ios::binary);
        os << partial;
    }
    std::size_t calls = 0;
    SweepOptions opts;
    opts.progress = [&](std::size_t, std::size_t) { ++calls; };
    run_sweep(c, opts);
    EXPECT_EQ(slurp(c.output), full);
    EXPECT_GT(calls, 0u);
    fs::remove_all(dir);
}

TEST(Lab, SweepWithQnn) {
    fs::path dir = scratch_dir("qnn");
    SweepConfig c = small_config();
    c.lambdas = {0.05, 0.1};
    c.realizations = 2;
    c.decoders = {DecoderKind::qec, DecoderKind::qnn};
    c.bases = {Basis::X};
    c.qnn.depth = 1;
    c.qnn.train_samples = 40;
    c.qnn.validation_factor = 2;
    c.qnn.restarts = 1;
    c.qnn.max_iterations = 20;
    c.output = (dir / "a.csv").string();
    SweepResult a = run_sweep(c, workers(2));
    ASSERT_EQ(a.rows.size(), 2u * 2u * 2u);
    for (const auto &row : a.rows) {
        EXPECT_FALSE(row.failed());
        EXPECT_GE(row.epsilon, 0.0);
    }
    c.output = (dir / "b.csv").string();
    run_sweep(c, workers(1));
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
    fs::remove_all(dir);
}

TEST(Lab, DefaultWindows) {
    FitWindow naive = default_window("naive", false);
    EXPECT_NEAR(naive.lo, std::pow(10.0, -2.5), 1e-15);
    EXPECT_NEAR(naive.hi, 0.1, 1e-15);
    FitWindow qec = default_window("qec", false);
    EXPECT_TRUE(qec.contains(std::pow(10.0, -0.5)));
    EXPECT_FALSE(qec.contains(0.01));
}

}  // namespace
