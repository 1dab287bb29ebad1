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

// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>

#include "pqd/pqd.hpp"

namespace {

using namespace pqd;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

SweepResult sweep(SweepConfig c, const std::string &name) {
    c.output = "acceptance_" + name + ".csv";
    SweepOptions o;
    o.resume = false;
    SweepResult r = run_sweep(c, o);
    for (const auto &e : r.errors) std::printf("  row failure: %s\n", e.c_str());
    return r;
}

SweepConfig base_config(const std::string &code, std::vector<double> lambdas, std::size_t realizations) {
    SweepConfig c;
    c.code = code;
    c.lambdas = std::move(lambdas);
    c.realizations = realizations;
    c.samples = 1000;
    c.bases = {Basis::X};
    c.seed = 1;
    return c;
}

double epsilon_at(const SweepResult &r, std::string_view decoder, double lambda, double *stderr_out = nullptr) {
    for (const auto &row : r.rows)
        if (row.decoder == decoder && row.lambda == lambda) {
            if (stderr_out) *stderr_out = row.standard_error;
            return row.epsilon;
        }
    return std::numeric_limits<double>::quiet_NaN();
}

Verdict naive_scaling() {
    SweepConfig c = base_config("five_qubit", log_grid(std::pow(10.0, -2.5), 0.1, 8), 50);
    c.decoders = {DecoderKind::naive};
    FitReport f = fit_exponent(sweep(c, "naive"), "naive", 'X', default_window("naive", false));
    return {std::abs(f.slope - 4.0) <= 0.4, fmt("slope %.3f +/- %.3f (target 4 +/- 0.4)", f.slope, f.slope_stderr)};
}

Verdict qec_noiseless_scaling() {
    const FitWindow w = default_window("qec", false);
    const auto grid = log_grid(w.lo, w.hi, 8);
    std::map<std::string, double> slope;
    std::string detail;
    for (const char *code : {"five_qubit", "steane", "shor"}) {
        SweepConfig c = base_config(code, grid, 50);
        c.decoders = {DecoderKind::qec};
        slope[code] = fit_exponent(sweep(c, std::string("qec_") + code), "qec", 'X', w).slope;
        detail += fmt("%s %.3f; ", code, slope[code]);
    }
    const double five = slope["five_qubit"];
    bool ok = std::abs(five - 8.0) <= 1.0 && five > 6.0;
    // Every code here has d = 3, so the collapse divides each slope by 4.
    for (const char *code : {"steane", "shor"}) {
        double rel = std::abs(slope[code] / 4.0 - five / 4.0) / (five / 4.0);
        ok = ok && rel <= 0.15;
        detail += fmt("%s collapse deviation %.1f%%; ", code, 100.0 * rel);
    }
    return {ok, detail + "(target 8 +/- 1, > 6, collapse within 15%)"};
}

Verdict qec_noisy_scaling() {
    const FitWindow w = default_window("qec", true);
    const auto grid = log_grid(w.lo, w.hi, 8);
    SweepConfig five = base_config("five_qubit", grid, 50);
    five.decoders = {DecoderKind::qec};
    five.noise_p = 1;
    double s5 = fit_exponent(sweep(five, "noisy_five"), "qec", 'X', w).slope;
    SweepConfig eleven = base_config("eleven_qubit", grid, 10);
    eleven.decoders = {DecoderKind::qec};
    eleven.noise_p = 1;
    double s11 = fit_exponent(sweep(eleven, "noisy_eleven"), "qec", 'X', w).slope;
    return {std::abs(s5 - 4.0) <= 0.5 && std::abs(s11 - 8.0) <= 1.5,
            fmt("five_qubit p=1 slope %.3f (target 4 +/- 0.5); eleven_qubit p=1 slope %.3f (target 8 +/- 1.5)", s5,
                s11)};
}

SweepConfig qnn_config(std::vector<double> lambdas, std::size_t realizations, std::size_t depth) {
    SweepConfig c = base_config("five_qubit", std::move(lambdas), realizations);
    c.qnn.depth = depth;
    c.qnn.train_samples = 400;
    c.qnn.validation_factor = 10;
    return c;
}

Verdict qnn_beats_qec() {
    SweepConfig c = qnn_config({0.1, 1.0}, 1, 4);
    c.perturbation = PerturbationKind::uniform_xz;
    c.decoders = {DecoderKind::qec, DecoderKind::qnn};
    SweepResult r = sweep(c, "qnn_vs_qec");
    bool ok = true;
    std::string detail;
    for (double lambda : {0.1, 1.0}) {
        double q = epsilon_at(r, "qec", lambda);
        double n = epsilon_at(r, "qnn", lambda);
        ok = ok && n < q;
        if (lambda == 1.0) ok = ok && n <= 0.1 * q;
        detail += fmt("lambda=%g qnn %.3e vs qec %.3e (ratio %.3g); ", lambda, n, q, n / q);
    }
    return {ok, detail + "(target qnn < qec, ratio <= 0.1 at lambda=1)"};
}

Verdict qnn_noisy_scaling() {
    SweepConfig c = qnn_config({0.02, 0.05, 0.1, 0.2}, 5, 4);
    c.noise_p = 1;
    c.decoders = {DecoderKind::qnn};
    FitReport f = fit_exponent(sweep(c, "qnn_noisy"), "qnn", 'X', FitWindow{0.02, 0.2});
    return {std::abs(f.slope - 4.0) <= 1.0, fmt("slope %.3f +/- %.3f (target 4 +/- 1)", f.slope, f.slope_stderr)};
}

Verdict depth_ablation() {
    // Below this the validation errors are at the double-precision floor and
    // compare as ties.
    const double tie = 1e-12;
    std::vector<double> eps, se;
    std::string detail;
    for (std::size_t depth = 1; depth <= 4; ++depth) {
        SweepConfig c = qnn_config({0.0}, 1, depth);
        c.noise_p = 1;
        c.decoders = {DecoderKind::qnn};
        SweepResult r = sweep(c, "depth_" + std::to_string(depth));
        double s = 0.0;
        eps.push_back(epsilon_at(r, "qnn", 0.0, &s));
        se.push_back(s);
        detail += fmt("d_C=%zu %.3e (se %.1e); ", depth, eps.back(), s);
    }
    bool ok = eps.back() <= 1e-3;
    for (std::size_t i = 1; i < eps.size(); ++i) {
        double allowance = 2.0 * std::hypot(se[i], se[i - 1]) + tie;
        ok = ok && eps[i] <= eps[i - 1] + allowance;
    }
    return {ok, detail + "(target non-increasing within 2 stderr, d_C=4 <= 1e-3)"};
}

// Dense embedding of a two-qubit gate, independent of the simulator's stride loops.
Matrix embed_gate(const Matrix4 &u, std::size_t n, std::size_t q0, std::size_t q1) {
    const std::size_t dim = std::size_t{1} << n;
    auto bit = [n](std::size_t i, std::size_t q) { return (i >> (n - 1 - q)) & 1u; };
    const std::size_t other = ~((std::size_t{1} << (n - 1 - q0)) | (std::size_t{1} << (n - 1 - q1)));
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c)
            if ((r & other) == (c & other))
                out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    u(static_cast<Eigen::Index>(2 * bit(r, q0) + bit(r, q1)),
                      static_cast<Eigen::Index>(2 * bit(c, q0) + bit(c, q1)));
    return out;
}

double loglog_slope(const std::vector<double> &x, const std::vector<double> &y) {
    return fit_power_law(x, y, FitWindow{x.front(), x.back()}).slope;
}

Verdict property_suite() {
    std::vector<std::string> failed;
    auto check = [&](bool ok, const std::string &what) {
        if (!ok) failed.push_back(what);
    };

    for (const char *name : {"five_qubit", "steane", "shor", "eleven_qubit"}) {
        StabilizerCode c = builtin_code(name);
        std::size_t p = (c.distance - 1) / 2;
        check(kl_check(c, p).max_offdiagonal <= 1e-10, std::string("KL ") + name);
    }

    StabilizerCode five = builtin_code("five_qubit");
    {
        const auto &t = five.correction_table;
        std::set<Syndrome> seen;
        bool ok = t.size() == 16;
        for (std::size_t s = 0; s < t.size(); ++s) {
            ok = ok && t.entries[s].weight() <= 1 && syndrome(five, t.entries[s]) == static_cast<Syndrome>(s);
            seen.insert(syndrome(five, t.entries[s]));
        }
        check(ok && seen.size() == 16, "five_qubit syndrome bijection");
        Matrix q = DecoderObservable::qec(five, Basis::Z).dense();
        check((q * q - Matrix::Identity(32, 32)).norm() <= 1e-10, "QEC logical squares to identity");
    }

    {
        SweepConfig c = base_config("five_qubit", {0.5}, 3);
        c.perturbation = PerturbationKind::stabilizer_sum;
        c.decoders = {DecoderKind::naive, DecoderKind::qec};
        c.bases = {Basis::X, Basis::Y, Basis::Z};
        SweepResult r = sweep(c, "stabilizer_sum");
        bool ok = !r.rows.empty();
        for (const auto &row : r.rows) ok = ok && row.epsilon <= 1e-20;
        check(ok, "stabilizer-sum perturbation decodes exactly");
    }

    {
        const std::vector<double> lambdas{0.01, 0.02, 0.04};
        for (std::size_t m : {0u, 1u}) {
            std::vector<double> infid;
            for (double lambda : lambdas) {
                double acc = 0.0;
                for (std::uint64_t seed = 0; seed < 5; ++seed) {
                    Perturbation v = sample_gue_perturbation(seed, 5);
                    SpectralResult r = lowest_eigenpairs(build_hamiltonian(five, v, lambda), 2);
                    acc += subspace_infidelity(r.eigenvectors, bw_truncated_state(five, v, lambda, m, 0));
                }
                infid.push_back(acc / 5.0);
            }
            double s = loglog_slope(lambdas, infid);
            check(std::abs(s - 2.0 * (m + 1)) <= 0.6, fmt("BW order %zu slope %.3f", m, s));
        }
    }

    {
        Rng rng(77);
        bool unitary = true;
        for (int k = 0; k < 100; ++k) {
            std::array<double, kGateParams> a{};
            for (auto &v : a) v = rng.uniform(0.0, 2.0 * std::numbers::pi);
            Matrix4 u = two_qubit_gate(a);
            unitary = unitary && (u.adjoint() * u - Matrix4::Identity()).norm() <= 1e-12;
        }
        check(unitary, "gate unitarity");
    }

    {
        NoiseModel noise = make_noise_model(five, 1);
        Rng srng(5);
        auto samples = draw_samples(srng, 100, noise);
        bool ok = true;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            SpectralResult sp =
                lowest_eigenpairs(build_hamiltonian(five, sample_gue_perturbation(seed, 5), 0.2), 2);
            align_degenerate_pair(sp, five);
            CodewordBasis b = fix_gauge(sp, five);
            QnnModel m = build_circuit(5, 2, seed % 2 ? Topology::trans_inv : Topology::brickwork_conv);
            Rng prng(1000 + seed);
            randomize_params(m, prng);
            QnnObjective obj(m, b, samples, noise, Basis::X);
            Eigen::VectorXd ga;
            obj.value_and_gradient(m.params, ga);
            Eigen::VectorXd gf = obj.finite_difference_gradient(m.params);
            ok = ok && (ga - gf).norm() <= 1e-6 * std::max(1.0, gf.norm());
        }
        check(ok, "analytic vs finite-difference gradient");
    }

    {
        Rng rng(8);
        bool ok = true;
        for (std::size_t n : {2u, 3u}) {
            for (Topology t : {Topology::brickwork_conv, Topology::trans_inv}) {
                QnnModel m = build_circuit(n, 2, t, {n - 1, 0});
                randomize_params(m, rng);
                const Eigen::Index dim = Eigen::Index{1} << n;
                Matrix u = Matrix::Identity(dim, dim);
                for (const auto &s : m.sites)
                    u = embed_gate(two_qubit_gate(m.group_angles(s.group)), n, s.q0, s.q1) * u;
                std::string z(n, 'I');
                z[m.output_qubit] = 'Z';
                Matrix obs = u.adjoint() * PauliString::from_string(z).to_dense() * u;
                for (int k = 0; k < 10; ++k) {
                    Vector psi(dim);
                    for (auto &a : psi) a = cplx(rng.normal(), rng.normal());
                    psi.normalize();
                    ok = ok && std::abs(forward(m, psi) - psi.dot(obs * psi).real()) <= 1e-12;
                }
            }
        }
        check(ok, "forward pass vs dense oracle");
    }

    std::string detail = failed.empty() ? "all properties hold" : "failed:";
    for (const auto &f : failed) detail += " [" + f + "]";
    return {failed.empty(), detail};
}

std::string slurp(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Verdict reproducibility() {
    SweepConfig c = base_config("five_qubit", log_grid(0.01, 0.3, 4), 6);
    c.decoders = {DecoderKind::naive, DecoderKind::qec, DecoderKind::qnn};
    c.bases = {Basis::X, Basis::Z};
    c.noise_p = 1;
    c.samples = 200;
    c.qnn.depth = 1;
    c.qnn.train_samples = 50;
    c.qnn.validation_factor = 2;
    c.qnn.restarts = 1;
    c.qnn.max_iterations = 50;
    std::vector<std::string> files;
    for (std::size_t workers : {1u, 3u, 1u}) {
        c.output = "acceptance_repro_" + std::to_string(files.size()) + ".csv";
        SweepOptions o;
        o.resume = false;
        o.workers = workers;
        run_sweep(c, o);
        files.push_back(slurp(c.output));
    }
    bool ok = !files[0].empty() && files[0] == files[1] && files[0] == files[2];
    return {ok, fmt("%zu bytes; workers=1 vs workers=3 %s, rerun %s", files[0].size(),
                    files[0] == files[1] ? "identical" : "differ", files[0] == files[2] ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char **argv) {
    const std::vector<std::pair<const char *, std::function<Verdict()>>> criteria{
        {"naive decoder scaling", naive_scaling},
        {"QEC noiseless scaling and collapse", qec_noiseless_scaling},
        {"QEC noisy scaling", qec_noisy_scaling},
        {"QNN beats QEC at strong perturbation", qnn_beats_qec},
        {"QNN noisy scaling", qnn_noisy_scaling},
        {"depth ablation", depth_ablation},
        {"property suite", property_suite},
        {"reproducibility across workers", reproducibility},
    };
    std::set<std::size_t> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoul(argv[i]));
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected.empty() && !selected.count(i + 1)) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception &e) {
            v = {false, std::string("error: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %zu %s: %s  %s [%.1f s]\n", i + 1, criteria[i].first, v.pass ? "PASS" : "FAIL",
                    v.detail.c_str(), secs);
        std::fflush(stdout);
        failures += v.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
