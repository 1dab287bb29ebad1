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

#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "pqd/codes.hpp"
#include "pqd/config.hpp"
#include "pqd/decoders.hpp"
#include "pqd/encoding.hpp"
#include "pqd/error.hpp"
#include "pqd/qnn.hpp"
#include "pqd/random.hpp"
#include "pqd/spectral.hpp"

namespace pqd {

struct SweepRow {
    std::string code;
    std::string decoder;
    char basis = 'X';
    double lambda = 0.0;
    std::uint64_t seed = 0;
    double epsilon = 0.0;
    double standard_error = 0.0;
    double wall_ms = 0.0;

    bool failed() const { return !std::isfinite(epsilon); }
    bool operator==(const SweepRow &) const = default;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    /// Diagnostics for rows recorded as failures (epsilon = nan).
    std::vector<std::string> errors;
};

inline constexpr std::string_view kCsvHeader = "code,decoder,basis,lambda,seed,epsilon,stderr,wall_ms";

/// Shortest text that reads back to the same double.
inline std::string format_real(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) {
        throw Error(ErrorKind::numerical, "cannot format number");
    }
    return std::string(buf, p);
}

inline std::string format_row(const SweepRow &r) {
    std::string out;
    out.reserve(96);
    out += r.code;
    out += ',';
    out += r.decoder;
    out += ',';
    out += r.basis;
    out += ',';
    out += format_real(r.lambda);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += format_real(r.epsilon);
    out += ',';
    out += format_real(r.standard_error);
    out += ',';
    out += format_real(r.wall_ms);
    return out;
}

inline void write_csv(std::ostream &os, const SweepResult &result) {
    os << kCsvHeader << '\n';
    for (const auto &r : result.rows) {
        os << format_row(r) << '\n';
    }
}

inline void write_csv(const std::string &path, const SweepResult &result) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw Error(ErrorKind::io, "cannot write '" + path + "'");
    }
    write_csv(os, result);
    if (!os) {
        throw Error(ErrorKind::io, "write failed for '" + path + "'");
    }
}

namespace detail {

inline SweepRow parse_row(std::string_view line, std::size_t line_no) {
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        f.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    auto fail = [&](const std::string &what) {
        return Error(ErrorKind::io, "csv line " + std::to_string(line_no) + ": " + what);
    };
    if (f.size() != 8) {
        throw fail("expected 8 fields");
    }
    auto real = [&](std::string_view s) {
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) {
            throw fail("bad number '" + std::string(s) + "'");
        }
        return v;
    };
    SweepRow r;
    r.code = std::string(f[0]);
    r.decoder = std::string(f[1]);
    if (f[2].size() != 1 || (f[2][0] != 'X' && f[2][0] != 'Y' && f[2][0] != 'Z')) {
        throw fail("bad basis");
    }
    r.basis = f[2][0];
    r.lambda = real(f[3]);
    auto [p, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), r.seed);
    if (ec != std::errc() || p != f[4].data() + f[4].size()) {
        throw fail("bad seed");
    }
    r.epsilon = real(f[5]);
    r.standard_error = real(f[6]);
    r.wall_ms = real(f[7]);
    return r;
}

}  // namespace detail

/// Reads rows written by write_csv. With `allow_truncated_tail`, an
/// unterminated final line (an interrupted write) is dropped.
inline SweepResult read_csv(std::istream &is, bool allow_truncated_tail = false) {
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    SweepResult out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        bool terminated = nl != std::string::npos;
        std::string_view line(text.data() + pos, (terminated ? nl : text.size()) - pos);
        pos = terminated ? nl + 1 : text.size();
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line_no == 1) {
            if (line != kCsvHeader) {
                throw Error(ErrorKind::io, "csv header does not match the sweep schema");
            }
            continue;
        }
        if (line.empty()) {
            continue;
        }
        if (!terminated && allow_truncated_tail) {
            break;
        }
        out.rows.push_back(detail::parse_row(line, line_no));
    }
    if (line_no == 0) {
        throw Error(ErrorKind::io, "csv is empty");
    }
    return out;
}

inline SweepResult read_csv(const std::string &path, bool allow_truncated_tail = false) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw Error(ErrorKind::io, "cannot open '" + path + "'");
    }
    try {
        return read_csv(is, allow_truncated_tail);
    } catch (const Error &e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

/// Seed of disorder realization r. Independent of lambda, so each realization
/// is one fixed perturbation followed along the whole grid.
inline std::uint64_t realization_seed(std::uint64_t master, std::size_t r) { return hash_combine(master, r); }

/// Read-only state shared by all sweep workers.
class SweepContext {
   public:
    explicit SweepContext(SweepConfig config) : config_(std::move(config)), code_(resolve_code(config_)) {
        validate(config_);
        if (config_.perturbation == PerturbationKind::uniform_xz) {
            fixed_ = uniform_xz_perturbation(code_.n);
        } else if (config_.perturbation == PerturbationKind::stabilizer_sum) {
            fixed_ = stabilizer_sum_perturbation(code_);
        } else if (config_.perturbation != PerturbationKind::gue_local) {
            throw Error(ErrorKind::config, "sweeps support gue_local, uniform_xz and stabilizer_sum perturbations");
        }
        noise_ = config_.noise_p == 0 ? noiseless_model(code_.n) : make_noise_model(code_, config_.noise_p);
        std::shared_ptr<const RecoveryFrame> frame;
        for (Basis b : config_.bases) {
            naive_.push_back(DecoderObservable::naive(code_, b));
            if (config_.uses(DecoderKind::qec)) {
                if (!frame) {
                    frame = make_recovery_frame(code_);
                }
                qec_.push_back(DecoderObservable::qec(code_, b, frame));
            }
        }
        if (config_.uses(DecoderKind::qnn)) {
            structure_ = build_circuit(code_.n, config_.qnn.depth, config_.qnn.topology,
                                       {config_.qnn.output_qubit, config_.qnn.decoder_layers});
        }
    }

    const SweepConfig &config() const noexcept { return config_; }
    const StabilizerCode &code() const noexcept { return code_; }
    const NoiseModel &noise() const noexcept { return noise_; }

    Perturbation perturbation(std::uint64_t rseed) const {
        if (fixed_) {
            return *fixed_;
        }
        return sample_gue_perturbation(hash_label(rseed, "perturbation"), code_.n);
    }

    /// Gauge-fixed perturbed codewords.
    CodewordBasis codewords(double lambda, std::uint64_t rseed) const {
        Matrix h = build_hamiltonian(code_, perturbation(rseed), lambda);
        SpectralResult sp = lowest_eigenpairs(h, 2);
        align_degenerate_pair(sp, code_);
        return fix_gauge(sp, code_);
    }

    TrainConfig train_config(Basis b, std::uint64_t rseed) const {
        TrainConfig t;
        t.basis = b;
        t.max_iterations = config_.qnn.max_iterations;
        t.tolerance = config_.qnn.tolerance;
        t.restarts = config_.qnn.restarts;
        t.seed = hash_label(rseed, "qnn-init");
        t.gradient = config_.qnn.gradient;
        t.optimizer = config_.qnn.optimizer;
        t.sgd = config_.qnn.sgd;
        t.averaging = config_.averaging;
        return t;
    }

    std::vector<SampleRecord> qnn_train_samples(std::uint64_t rseed) const {
        Rng rng(hash_label(rseed, "qnn-train"));
        return draw_samples(rng, config_.qnn.train_samples, noise_);
    }

    std::vector<SampleRecord> qnn_validation_samples(std::uint64_t rseed) const {
        Rng rng(hash_label(rseed, "qnn-validation"));
        return draw_samples(rng, config_.qnn.train_samples * config_.qnn.validation_factor, noise_);
    }

    const QnnModel &qnn_structure() const noexcept { return structure_; }

    const DecoderObservable &observable(DecoderKind d, std::size_t basis_index) const {
        return d == DecoderKind::naive ? naive_[basis_index] : qec_[basis_index];
    }

   private:
    SweepConfig config_;
    StabilizerCode code_;
    std::optional<Perturbation> fixed_;
    NoiseModel noise_;
    std::vector<DecoderObservable> naive_;
    std::vector<DecoderObservable> qec_;
    QnnModel structure_;
};

/// Rows for one (lambda, realization) point plus trained QNN parameters per
/// basis (for warm-starting the next lambda).
struct PointOutcome {
    std::vector<SweepRow> rows;
    std::vector<std::string> errors;
    std::map<char, Eigen::VectorXd> trained;
};

inline PointOutcome evaluate_point(const SweepContext &ctx, double lambda, std::size_t realization,
                                   const std::map<char, Eigen::VectorXd> *warm = nullptr) {
    const SweepConfig &cfg = ctx.config();
    const std::uint64_t rseed = realization_seed(cfg.seed, realization);
    PointOutcome out;
    auto make_row = [&](DecoderKind d, Basis b) {
        SweepRow r;
        r.code = ctx.code().name;
        r.decoder = std::string(to_string(d));
        r.basis = to_char(b);
        r.lambda = lambda;
        r.seed = rseed;
        return r;
    };
    auto context = [&](const SweepRow &r) {
        return r.code + "/" + r.decoder + "/" + r.basis + " lambda=" + format_real(lambda) +
               " realization=" + std::to_string(realization) + ": ";
    };
    auto fail_row = [&](SweepRow r, const std::string &what) {
        r.epsilon = std::numeric_limits<double>::quiet_NaN();
        r.standard_error = std::numeric_limits<double>::quiet_NaN();
        out.errors.push_back(context(r) + what);
        out.rows.push_back(std::move(r));
    };

    std::optional<CodewordBasis> basis;
    std::vector<SampleRecord> samples;
    std::string setup_error;
    try {
        basis = ctx.codewords(lambda, rseed);
        Rng rng(hash_label(rseed, "samples"));
        samples = draw_samples(rng, cfg.samples, ctx.noise());
    } catch (const std::exception &e) {
        setup_error = e.what();
    }
    std::optional<std::vector<SampleRecord>> qnn_train;
    std::optional<std::vector<SampleRecord>> qnn_valid;
    for (DecoderKind d : cfg.decoders) {
        for (std::size_t bi = 0; bi < cfg.bases.size(); ++bi) {
            const Basis b = cfg.bases[bi];
            SweepRow row = make_row(d, b);
            if (!basis) {
                fail_row(std::move(row), setup_error);
                continue;
            }
            const auto start = std::chrono::steady_clock::now();
            try {
                ErrorEstimate est;
                if (d == DecoderKind::qnn) {
                    if (!qnn_train) {
                        qnn_train = ctx.qnn_train_samples(rseed);
                        qnn_valid = ctx.qnn_validation_samples(rseed);
                    }
                    TrainConfig tc = ctx.train_config(b, rseed);
                    if (warm) {
                        if (auto it = warm->find(row.basis); it != warm->end()) {
                            tc.warm_starts.push_back(it->second);
                        }
                    }
                    auto [model, report] = train(ctx.qnn_structure(), *basis, *qnn_train, ctx.noise(), tc,
                                                 ValidationSet{*qnn_valid, &ctx.noise()});
                    est = evaluate(model, *basis, *qnn_valid, ctx.noise(), b, cfg.averaging);
                    out.trained[row.basis] = model.params;
                } else {
                    est = generalization_error(ctx.observable(d, bi), *basis, samples, ctx.noise(), cfg.averaging);
                }
                row.epsilon = est.epsilon;
                row.standard_error = est.standard_error;
                if (cfg.timing) {
                    row.wall_ms =
                        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
                }
                out.rows.push_back(std::move(row));
            } catch (const std::exception &e) {
                fail_row(std::move(row), e.what());
            }
        }
    }
    return out;
}

struct SweepOptions {
    /// Overrides the configured worker count when nonzero.
    std::size_t workers = 0;
    /// Reuse rows already present in the output file.
    bool resume = true;
    /// Called from the writing thread after each (lambda, realization) point.
    std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Runs every (lambda, realization) point on a worker pool and streams rows
/// to the configured output in canonical order (lambda-major, then
/// realization, decoder, basis), independent of scheduling.
inline SweepResult run_sweep(const SweepConfig &config, const SweepOptions &options = {}) {
    SweepContext ctx(config);
    const SweepConfig &cfg = ctx.config();
    const std::size_t nl = cfg.lambdas.size();
    const std::size_t nr = cfg.realizations;
    const std::size_t per_point = cfg.decoders.size() * cfg.bases.size();
    const std::size_t slots = nl * nr;

    // Existing complete points, keyed by (lambda index, realization).
    std::vector<std::optional<std::vector<SweepRow>>> done(slots);
    if (options.resume && !cfg.output.empty() && std::filesystem::exists(cfg.output)) {
        SweepResult prior = read_csv(cfg.output, true);
        std::map<std::tuple<std::string, std::string, char, double, std::uint64_t>, SweepRow> by_key;
        for (const auto &r : prior.rows) {
            if (!r.failed()) {
                by_key[{r.code, r.decoder, r.basis, r.lambda, r.seed}] = r;
            }
        }
        for (std::size_t li = 0; li < nl; ++li) {
            for (std::size_t r = 0; r < nr; ++r) {
                std::vector<SweepRow> rows;
                const std::uint64_t rseed = realization_seed(cfg.seed, r);
                for (DecoderKind d : cfg.decoders) {
                    for (Basis b : cfg.bases) {
                        auto it = by_key.find({ctx.code().name, std::string(to_string(d)), to_char(b),
                                               cfg.lambdas[li], rseed});
                        if (it != by_key.end()) {
                            rows.push_back(it->second);
                        }
                    }
                }
                if (rows.size() == per_point) {
                    done[li * nr + r] = std::move(rows);
                }
            }
        }
    }

    // Work units. With QNN warm starts a unit is a realization's whole lambda
    // chain, recomputed entirely unless every point of it is already present.
    struct Task {
        std::size_t realization;
        std::vector<std::size_t> lambda_indices;
    };
    std::vector<Task> tasks;
    const bool chained = cfg.uses(DecoderKind::qnn) && cfg.qnn.warm_start;
    if (chained) {
        for (std::size_t r = 0; r < nr; ++r) {
            bool complete = true;
            for (std::size_t li = 0; li < nl; ++li) {
                complete = complete && done[li * nr + r].has_value();
            }
            if (!complete) {
                Task t{r, {}};
                for (std::size_t li = 0; li < nl; ++li) {
                    done[li * nr + r].reset();
                    t.lambda_indices.push_back(li);
                }
                tasks.push_back(std::move(t));
            }
        }
    } else {
        for (std::size_t li = 0; li < nl; ++li) {
            for (std::size_t r = 0; r < nr; ++r) {
                if (!done[li * nr + r]) {
                    tasks.push_back({r, {li}});
                }
            }
        }
    }

    std::mutex mu;
    std::condition_variable cv;
    std::vector<std::optional<PointOutcome>> computed(slots);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) {
                return;
            }
            const Task &task = tasks[t];
            std::map<char, Eigen::VectorXd> warm;
            for (std::size_t li : task.lambda_indices) {
                PointOutcome o;
                try {
                    o = evaluate_point(ctx, cfg.lambdas[li], task.realization, chained ? &warm : nullptr);
                } catch (const std::exception &e) {
                    o.errors.push_back(std::string("point failed: ") + e.what());
                }
                if (chained) {
                    for (auto &[b, p] : o.trained) {
                        warm[b] = p;
                    }
                }
                {
                    std::lock_guard lock(mu);
                    computed[li * nr + task.realization] = std::move(o);
                }
                cv.notify_all();
            }
        }
    };
    std::size_t nworkers = options.workers ? options.workers : cfg.workers;
    nworkers = std::max<std::size_t>(1, std::min(nworkers, tasks.size()));
    std::vector<std::thread> pool;
    if (!tasks.empty()) {
        for (std::size_t i = 0; i < nworkers; ++i) {
            pool.emplace_back(worker);
        }
    }

    std::ofstream os;
    if (!cfg.output.empty()) {
        os.open(cfg.output, std::ios::binary | std::ios::trunc);
        if (!os) {
            for (auto &th : pool) th.join();
            throw Error(ErrorKind::io, "cannot write '" + cfg.output + "'");
        }
        os << kCsvHeader << '\n';
        os.flush();
    }
    SweepResult result;
    std::exception_ptr failure;
    for (std::size_t s = 0; s < slots; ++s) {
        std::vector<SweepRow> rows;
        if (done[s]) {
            rows = std::move(*done[s]);
        } else {
            std::unique_lock lock(mu);
            cv.wait(lock, [&] { return computed[s].has_value(); });
            PointOutcome o = std::move(*computed[s]);
            computed[s].reset();
            lock.unlock();
            rows = std::move(o.rows);
            for (auto &e : o.errors) {
                result.errors.push_back(std::move(e));
            }
        }
        if (os.is_open() && !failure) {
            for (const auto &r : rows) {
                os << format_row(r) << '\n';
            }
            os.flush();
            if (!os) {
                failure = std::make_exception_ptr(Error(ErrorKind::io, "write failed for '" + cfg.output + "'"));
            }
        }
        for (auto &r : rows) {
            result.rows.push_back(std::move(r));
        }
        if (options.progress) {
            options.progress(s + 1, slots);
        }
    }
    for (auto &th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return result;
}

}  // namespace pqd
