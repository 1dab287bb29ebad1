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

// Command-line front end: code inspection, sweeps, fits, plots and QNN
// training. Failures print one `error kind=... message=...` line to stderr.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pqd/pqd.hpp"

namespace {

using namespace pqd;

std::string quote(const std::string &s) {
    nlohmann::json j = s;
    return j.dump();
}

FitWindow parse_window(const std::string &text) {
    auto parts = detail::split_list(text);
    if (parts.size() != 2) {
        throw Error(ErrorKind::invalid_argument, "window must be lo,hi");
    }
    KeyValueEntry e{"window", text, 0};
    FitWindow w{detail::parse_real(e, parts[0]), detail::parse_real(e, parts[1])};
    if (!(w.lo > 0.0) || !(w.hi > w.lo)) {
        throw Error(ErrorKind::invalid_argument, "window needs 0 < lo < hi");
    }
    return w;
}

nlohmann::json fit_json(const FitReport &f) {
    return {{"slope", f.slope},
            {"slope_stderr", f.slope_stderr},
            {"intercept", f.intercept},
            {"window", {f.window.lo, f.window.hi}},
            {"points_used", f.points_used}};
}

void cmd_codes_list() {
    for (const auto &spec : builtin_code_specs()) {
        StabilizerCode c = builtin_code(spec.name);
        std::cout << c.name << " n=" << c.n << " d=" << c.distance << " correctable=" << c.correctable_weight()
                  << '\n';
    }
}

void cmd_codes_audit(const std::string &name) {
    StabilizerCode c = builtin_code(name);
    std::cout << export_code(c);
    std::cout << "X_L = " << c.logical_x.str() << '\n';
    std::cout << "Z_L = " << c.logical_z.str() << '\n';
    std::cout << "Y_L = " << c.logical_y.str() << '\n';
    auto measured = measured_distance(c, c.distance);
    std::cout << "measured_distance = " << (measured ? std::to_string(*measured) : "> limit") << '\n';
    std::cout << "syndromes_covered = " << c.correction_table.size() << " / "
              << (std::size_t{1} << c.stabilizers.size()) << '\n';
    std::cout << "table_max_weight = " << c.correction_table.max_weight_used << '\n';
    KlReport kl = kl_check(c, c.correctable_weight());
    std::cout << "kl_errors = " << kl.errors.size() << '\n';
    std::cout << "kl_max_offdiagonal = " << format_real(kl.max_offdiagonal) << '\n';
    std::cout << "kl_max_diagonal_mismatch = " << format_real(kl.max_diagonal_mismatch) << '\n';
}

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string out;

    void apply(SweepConfig &c) const {
        if (seed) c.seed = *seed;
        if (workers) c.workers = *workers;
        if (!out.empty()) c.output = out;
    }
};

int cmd_sweep(const std::string &path, const Overrides &ov, bool quiet) {
    SweepConfig c = load_sweep_config(path);
    ov.apply(c);
    validate(c);
    SweepOptions opts;
    if (!quiet) {
        opts.progress = [](std::size_t done, std::size_t total) {
            std::cerr << "\rpoints " << done << '/' << total << std::flush;
            if (done == total) std::cerr << '\n';
        };
    }
    SweepResult r = run_sweep(c, opts);
    if (c.output.empty()) {
        write_csv(std::cout, r);
    }
    for (const auto &e : r.errors) {
        std::cerr << "warning kind=stage message=" << quote(e) << '\n';
    }
    if (!quiet) {
        std::cerr << "rows " << r.rows.size() << ", failed " << r.errors.size() << '\n';
    }
    return 0;
}

void cmd_fit(const std::string &csv, const std::string &decoder, const std::string &basis,
             const std::string &window, const std::string &code, bool noisy) {
    SweepResult r = read_csv(csv);
    FitWindow w = window.empty() ? default_window(decoder, noisy) : parse_window(window);
    FitReport f = fit_exponent(r, decoder, to_char(parse_basis(basis)), w, code);
    std::cout << fit_json(f).dump() << '\n';
}

void cmd_collapse(const std::vector<std::string> &csvs, const std::vector<std::string> &divisor_args,
                  std::size_t noise_p) {
    std::vector<SweepResult> results;
    std::map<std::string, double> divisors;
    for (const auto &path : csvs) {
        results.push_back(read_csv(path));
        for (const auto &key : series_keys(results.back())) {
            if (!divisors.count(key.code)) {
                for (const auto &spec : builtin_code_specs()) {
                    if (spec.name == key.code && spec.distance + 1 > 2 * noise_p) {
                        divisors[key.code] = static_cast<double>(spec.distance + 1 - 2 * noise_p);
                    }
                }
            }
        }
    }
    for (const auto &arg : divisor_args) {
        auto eq = arg.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::invalid_argument, "divisor must be code=value");
        }
        KeyValueEntry e{"divisor", arg, 0};
        divisors[arg.substr(0, eq)] = detail::parse_real(e, arg.substr(eq + 1));
    }
    std::cout << "code,decoder,basis,lambda,value\n";
    for (const auto &p : collapse_transform(results, divisors)) {
        std::cout << p.code << ',' << p.decoder << ',' << p.basis << ',' << format_real(p.lambda) << ','
                  << format_real(p.value) << '\n';
    }
}

void cmd_plot(const std::string &csv, const std::string &out, bool noisy, bool fits, const std::string &title) {
    SweepResult r = read_csv(csv);
    std::vector<FitOverlay> overlays;
    if (fits) {
        for (const auto &key : series_keys(r)) {
            try {
                FitReport f = fit_exponent(r, key.decoder, key.basis, default_window(key.decoder, noisy), key.code);
                overlays.push_back({key.code + " " + key.decoder + " " + key.basis, f});
            } catch (const Error &) {
                // Series without enough points in the window get no guide line.
            }
        }
    }
    PlotStyle style;
    style.title = title;
    emit_svg(out, r, overlays, style);
}

struct QnnSetup {
    SweepContext ctx;
    CodewordBasis basis;
    std::uint64_t rseed;
};

QnnSetup qnn_setup(const std::string &config_path, const Overrides &ov) {
    SweepConfig c = load_sweep_config(config_path);
    ov.apply(c);
    if (!c.uses(DecoderKind::qnn)) {
        c.decoders.push_back(DecoderKind::qnn);
    }
    SweepContext ctx(c);
    std::uint64_t rseed = realization_seed(c.seed, 0);
    CodewordBasis basis = ctx.codewords(c.lambdas.front(), rseed);
    return {std::move(ctx), std::move(basis), rseed};
}

void cmd_qnn_train(const std::string &config_path, const Overrides &ov) {
    QnnSetup s = qnn_setup(config_path, ov);
    const SweepConfig &c = s.ctx.config();
    const Basis b = c.bases.front();
    auto train_samples = s.ctx.qnn_train_samples(s.rseed);
    auto valid = s.ctx.qnn_validation_samples(s.rseed);
    TrainConfig tc = s.ctx.train_config(b, s.rseed);
    auto [model, report] =
        train(s.ctx.qnn_structure(), s.basis, train_samples, s.ctx.noise(), tc, ValidationSet{valid, &s.ctx.noise()});
    ErrorEstimate est = evaluate(model, s.basis, valid, s.ctx.noise(), b, c.averaging);
    nlohmann::json j = to_json(model, c.seed, &tc);
    const std::string path = ov.out.empty() ? "model.json" : ov.out;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw Error(ErrorKind::io, "cannot write '" + path + "'");
    }
    os << j.dump(1) << '\n';
    if (!os) {
        throw Error(ErrorKind::io, "write failed for '" + path + "'");
    }
    nlohmann::json summary = {{"model", path},
                              {"final_loss", report.final_loss},
                              {"iterations", report.iterations},
                              {"gradient_norm", report.gradient_norm},
                              {"wall_time", report.wall_time},
                              {"converged", report.converged},
                              {"status", report.status},
                              {"validation_epsilon", est.epsilon},
                              {"validation_stderr", est.standard_error}};
    std::cout << summary.dump() << '\n';
}

void cmd_qnn_eval(const std::string &model_path, const std::string &config_path, const Overrides &ov) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(model_path));
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorKind::io, model_path + ": " + e.what());
    }
    QnnModel model = model_from_json(j);
    QnnSetup s = qnn_setup(config_path, ov);
    if (model.n != s.ctx.code().n) {
        throw Error(ErrorKind::length_mismatch, "model qubit count does not match the configured code");
    }
    const SweepConfig &c = s.ctx.config();
    auto valid = s.ctx.qnn_validation_samples(s.rseed);
    ErrorEstimate est = evaluate(model, s.basis, valid, s.ctx.noise(), c.bases.front(), c.averaging);
    std::cout << nlohmann::json{{"epsilon", est.epsilon}, {"stderr", est.standard_error}}.dump() << '\n';
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Decoders for perturbed stabilizer codes"};
    app.require_subcommand(1);

    Overrides ov;
    auto add_overrides = [&](CLI::App *sub) {
        sub->add_option("--seed", ov.seed, "Master seed override");
        sub->add_option("--workers", ov.workers, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", ov.out, "Output path");
    };

    auto *codes = app.add_subcommand("codes", "Inspect builtin codes");
    codes->require_subcommand(1);
    codes->add_subcommand("list", "List builtin codes");
    std::string audit_name;
    auto *audit = codes->add_subcommand("audit", "Check a builtin code");
    audit->add_option("name", audit_name)->required();

    std::string sweep_config;
    bool quiet = false;
    auto *sweep = app.add_subcommand("sweep", "Run a lambda sweep");
    sweep->add_option("config", sweep_config)->required()->check(CLI::ExistingFile);
    sweep->add_flag("--quiet", quiet, "No progress output");
    add_overrides(sweep);

    std::string fit_csv, fit_decoder = "naive", fit_basis = "X", fit_window, fit_code;
    bool fit_noisy = false;
    auto *fit = app.add_subcommand("fit", "Fit the power-law exponent of a series");
    fit->add_option("csv", fit_csv)->required()->check(CLI::ExistingFile);
    fit->add_option("--decoder", fit_decoder);
    fit->add_option("--basis", fit_basis);
    fit->add_option("--window", fit_window, "lo,hi");
    fit->add_option("--code", fit_code);
    fit->add_flag("--noisy", fit_noisy, "Use the noisy default window");

    std::vector<std::string> collapse_csvs, collapse_divisors;
    std::size_t collapse_p = 0;
    auto *collapse = app.add_subcommand("collapse", "Rescale log-error curves by their exponents");
    collapse->add_option("csv", collapse_csvs)->required()->check(CLI::ExistingFile);
    collapse->add_option("--divisor", collapse_divisors, "code=value");
    collapse->add_option("--noise-p", collapse_p);

    std::string plot_csv, plot_out, plot_title;
    bool plot_noisy = false, plot_nofit = false;
    auto *plot = app.add_subcommand("plot", "Write a log-log SVG");
    plot->add_option("csv", plot_csv)->required()->check(CLI::ExistingFile);
    plot->add_option("-o,--out", plot_out)->required();
    plot->add_option("--title", plot_title);
    plot->add_flag("--noisy", plot_noisy, "Use noisy default fit windows");
    plot->add_flag("--no-fit", plot_nofit, "Omit fitted guide lines");

    auto *qnn = app.add_subcommand("qnn", "Train or evaluate a circuit decoder");
    qnn->require_subcommand(1);
    std::string train_config;
    auto *qtrain = qnn->add_subcommand("train", "Train at the first lambda of a config");
    qtrain->add_option("config", train_config)->required()->check(CLI::ExistingFile);
    add_overrides(qtrain);
    std::string eval_model, eval_config;
    auto *qeval = qnn->add_subcommand("eval", "Evaluate a saved model");
    qeval->add_option("model", eval_model)->required()->check(CLI::ExistingFile);
    qeval->add_option("config", eval_config)->required()->check(CLI::ExistingFile);
    add_overrides(qeval);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        std::cerr << "error kind=usage message=" << quote(e.what()) << '\n';
        return 2;
    }

    try {
        if (codes->parsed()) {
            if (audit->parsed()) {
                cmd_codes_audit(audit_name);
            } else {
                cmd_codes_list();
            }
        } else if (sweep->parsed()) {
            return cmd_sweep(sweep_config, ov, quiet);
        } else if (fit->parsed()) {
            cmd_fit(fit_csv, fit_decoder, fit_basis, fit_window, fit_code, fit_noisy);
        } else if (collapse->parsed()) {
            cmd_collapse(collapse_csvs, collapse_divisors, collapse_p);
        } else if (plot->parsed()) {
            cmd_plot(plot_csv, plot_out, plot_noisy, !plot_nofit, plot_title);
        } else if (qtrain->parsed()) {
            cmd_qnn_train(train_config, ov);
        } else if (qeval->parsed()) {
            cmd_qnn_eval(eval_model, eval_config, ov);
        }
    } catch (const Error &e) {
        std::cerr << "error kind=" << to_string(e.kind()) << " message=" << quote(e.what()) << '\n';
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error kind=internal message=" << quote(e.what()) << '\n';
        return 1;
    }
    return 0;
}
