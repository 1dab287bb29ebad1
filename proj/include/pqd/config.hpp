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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pqd/decoders.hpp"
#include "pqd/encoding.hpp"
#include "pqd/error.hpp"
#include "pqd/qnn.hpp"
#include "pqd/spectral.hpp"

namespace pqd {

/// Flat `key = value` text. '#' starts a comment; keys may appear once.
struct KeyValueEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const char *ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto pos = s.find(',', start);
        auto item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (!item.empty()) {
            out.emplace_back(item);
        }
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline std::string config_context(const KeyValueEntry &e) {
    return "line " + std::to_string(e.line) + " ('" + e.key + "')";
}

}  // namespace detail

inline std::vector<KeyValueEntry> parse_key_values(std::string_view text) {
    std::vector<KeyValueEntry> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorKind::config, "line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key(detail::trim(line.substr(0, eq)));
        std::string value(detail::trim(line.substr(eq + 1)));
        if (key.empty() || !std::all_of(key.begin(), key.end(), [](char c) {
                return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
            })) {
            throw Error(ErrorKind::config, "line " + std::to_string(line_no) + ": malformed key '" + key + "'");
        }
        for (const auto &e : out) {
            if (e.key == key) {
                throw Error(ErrorKind::config, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
            }
        }
        out.push_back({std::move(key), std::move(value), line_no});
    }
    return out;
}

inline std::string read_text_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace detail {

inline double parse_real(const KeyValueEntry &e, std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
        throw Error(ErrorKind::config, config_context(e) + ": expected a real number, got '" + std::string(s) + "'");
    }
    return v;
}

inline std::uint64_t parse_unsigned(const KeyValueEntry &e, std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw Error(ErrorKind::config,
                    config_context(e) + ": expected a non-negative integer, got '" + std::string(s) + "'");
    }
    return v;
}

inline bool parse_bool(const KeyValueEntry &e) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw Error(ErrorKind::config, config_context(e) + ": expected true or false");
}

template <class F>
auto with_context(const KeyValueEntry &e, F &&f) {
    try {
        return f();
    } catch (const Error &err) {
        if (err.kind() == ErrorKind::config) {
            throw;
        }
        throw Error(ErrorKind::config, config_context(e) + ": " + err.what());
    }
}

}  // namespace detail

enum class DecoderKind { naive, qec, qnn };

inline std::string_view to_string(DecoderKind d) {
    switch (d) {
        case DecoderKind::naive: return "naive";
        case DecoderKind::qec: return "qec";
        case DecoderKind::qnn: return "qnn";
    }
    return "naive";
}

inline DecoderKind parse_decoder(std::string_view s) {
    if (s == "naive") return DecoderKind::naive;
    if (s == "qec") return DecoderKind::qec;
    if (s == "qnn") return DecoderKind::qnn;
    throw Error(ErrorKind::invalid_argument, "decoder must be naive, qec or qnn");
}

inline std::string_view to_string(NoiseAveraging m) {
    return m == NoiseAveraging::exhaustive ? "exhaustive" : "per_sample";
}

inline NoiseAveraging parse_noise_averaging(std::string_view s) {
    if (s == "exhaustive") return NoiseAveraging::exhaustive;
    if (s == "per_sample") return NoiseAveraging::per_sample;
    throw Error(ErrorKind::invalid_argument, "noise averaging must be exhaustive or per_sample");
}

struct QnnSettings {
    std::size_t depth = 4;
    Topology topology = Topology::brickwork_conv;
    std::size_t output_qubit = 0;
    std::size_t decoder_layers = 1;
    std::size_t train_samples = 400;
    /// N_V = validation_factor * N_T.
    std::size_t validation_factor = 10;
    std::size_t restarts = 3;
    std::size_t max_iterations = 100000;
    double tolerance = 1e-15;
    OptimizerKind optimizer = OptimizerKind::bfgs;
    GradientMode gradient = GradientMode::analytic;
    SgdOptions sgd{};
    /// Seed each lambda point with the parameters trained at the previous one.
    bool warm_start = true;
};

struct SweepConfig {
    std::string code = "five_qubit";
    /// Optional path to a code in the text format of export_code.
    std::string code_file;
    PerturbationKind perturbation = PerturbationKind::gue_local;
    std::vector<double> lambdas;
    std::size_t realizations = 100;
    std::size_t samples = 1000;
    std::size_t noise_p = 0;
    NoiseAveraging averaging = NoiseAveraging::exhaustive;
    std::vector<DecoderKind> decoders{DecoderKind::naive, DecoderKind::qec};
    std::vector<Basis> bases{Basis::X};
    std::uint64_t seed = 1;
    std::string output;
    std::size_t workers = 1;
    /// Record wall-clock time per row; off keeps output byte-reproducible.
    bool timing = false;
    QnnSettings qnn{};

    bool uses(DecoderKind d) const { return std::find(decoders.begin(), decoders.end(), d) != decoders.end(); }
};

/// `count` log-spaced points from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi >= lo) || count == 0) {
        throw Error(ErrorKind::invalid_argument, "log grid needs 0 < lo <= hi and at least one point");
    }
    std::vector<double> out(count);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < count; ++i) {
        double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        out[i] = std::pow(10.0, a + (b - a) * f);
    }
    return out;
}

inline void validate(const SweepConfig &c) {
    if (c.lambdas.empty()) {
        throw Error(ErrorKind::config, "lambda grid is empty");
    }
    for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
        if (!(c.lambdas[i] >= 0.0) || !std::isfinite(c.lambdas[i])) {
            throw Error(ErrorKind::config, "lambda values must be finite and non-negative");
        }
        if (i > 0 && !(c.lambdas[i] > c.lambdas[i - 1])) {
            throw Error(ErrorKind::config, "lambda grid must be strictly ascending");
        }
    }
    if (c.realizations < 1) throw Error(ErrorKind::config, "realizations must be at least 1");
    if (c.samples < 1) throw Error(ErrorKind::config, "samples must be at least 1");
    if (c.decoders.empty()) throw Error(ErrorKind::config, "no decoders requested");
    if (c.bases.empty()) throw Error(ErrorKind::config, "no bases requested");
    if (c.workers < 1) throw Error(ErrorKind::config, "workers must be at least 1");
    if (c.uses(DecoderKind::qnn)) {
        if (c.qnn.depth < 1) throw Error(ErrorKind::config, "qnn_depth must be at least 1");
        if (c.qnn.train_samples < 1) throw Error(ErrorKind::config, "qnn_train_samples must be at least 1");
        if (c.qnn.validation_factor < 1) throw Error(ErrorKind::config, "qnn_validation_factor must be at least 1");
        if (c.qnn.restarts < 1) throw Error(ErrorKind::config, "qnn_restarts must be at least 1");
    }
}

inline SweepConfig sweep_config_from_entries(const std::vector<KeyValueEntry> &entries) {
    SweepConfig c;
    std::optional<double> lo;
    std::optional<double> hi;
    std::optional<std::size_t> points;
    bool explicit_grid = false;
    using namespace detail;
    for (const auto &e : entries) {
        const std::string &k = e.key;
        const std::string &v = e.value;
        auto count = [&] { return static_cast<std::size_t>(parse_unsigned(e, v)); };
        if (k == "code") {
            c.code = v;
        } else if (k == "code_file") {
            c.code_file = v;
        } else if (k == "perturbation") {
            c.perturbation = with_context(e, [&] { return parse_perturbation_kind(v); });
        } else if (k == "lambdas") {
            explicit_grid = true;
            c.lambdas.clear();
            for (const auto &item : split_list(v)) {
                c.lambdas.push_back(parse_real(e, item));
            }
        } else if (k == "lambda_min") {
            lo = parse_real(e, v);
        } else if (k == "lambda_max") {
            hi = parse_real(e, v);
        } else if (k == "lambda_points") {
            points = count();
        } else if (k == "realizations") {
            c.realizations = count();
        } else if (k == "samples") {
            c.samples = count();
        } else if (k == "noise_p") {
            c.noise_p = count();
        } else if (k == "noise_averaging") {
            c.averaging = with_context(e, [&] { return parse_noise_averaging(v); });
        } else if (k == "decoders") {
            c.decoders.clear();
            for (const auto &item : split_list(v)) {
                c.decoders.push_back(with_context(e, [&] { return parse_decoder(item); }));
            }
        } else if (k == "bases") {
            c.bases.clear();
            for (const auto &item : split_list(v)) {
                c.bases.push_back(with_context(e, [&] { return parse_basis(item); }));
            }
        } else if (k == "seed") {
            c.seed = parse_unsigned(e, v);
        } else if (k == "output") {
            c.output = v;
        } else if (k == "workers") {
            c.workers = count();
        } else if (k == "timing") {
            c.timing = parse_bool(e);
        } else if (k == "qnn_depth") {
            c.qnn.depth = count();
        } else if (k == "qnn_topology") {
            c.qnn.topology = with_context(e, [&] { return parse_topology(v); });
        } else if (k == "qnn_output_qubit") {
            c.qnn.output_qubit = count();
        } else if (k == "qnn_decoder_layers") {
            c.qnn.decoder_layers = count();
        } else if (k == "qnn_train_samples") {
            c.qnn.train_samples = count();
        } else if (k == "qnn_validation_factor") {
            c.qnn.validation_factor = count();
        } else if (k == "qnn_restarts") {
            c.qnn.restarts = count();
        } else if (k == "qnn_max_iterations") {
            c.qnn.max_iterations = count();
        } else if (k == "qnn_tolerance") {
            c.qnn.tolerance = parse_real(e, v);
        } else if (k == "qnn_optimizer") {
            c.qnn.optimizer = with_context(e, [&] { return parse_optimizer(v); });
        } else if (k == "qnn_gradient") {
            c.qnn.gradient = with_context(e, [&] { return parse_gradient_mode(v); });
        } else if (k == "qnn_warm_start") {
            c.qnn.warm_start = parse_bool(e);
        } else if (k == "qnn_sgd_epochs") {
            c.qnn.sgd.epochs = count();
        } else if (k == "qnn_sgd_batch_size") {
            c.qnn.sgd.batch_size = count();
        } else if (k == "qnn_sgd_learning_rate") {
            c.qnn.sgd.learning_rate = parse_real(e, v);
        } else {
            throw Error(ErrorKind::config, "line " + std::to_string(e.line) + ": unknown key '" + k + "'");
        }
    }
    if (explicit_grid && (lo || hi || points)) {
        throw Error(ErrorKind::config, "give either lambdas or lambda_min/lambda_max/lambda_points, not both");
    }
    if (!explicit_grid) {
        if (!lo || !hi || !points) {
            throw Error(ErrorKind::config, "lambda grid needs lambdas or all of lambda_min, lambda_max, lambda_points");
        }
        c.lambdas = log_grid(*lo, *hi, *points);
    }
    validate(c);
    return c;
}

inline SweepConfig parse_sweep_config(std::string_view text) { return sweep_config_from_entries(parse_key_values(text)); }

inline SweepConfig load_sweep_config(const std::string &path) {
    std::string text = read_text_file(path);
    try {
        return parse_sweep_config(text);
    } catch (const Error &e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

/// Resolves the configured code: a builtin by name or a code file.
inline StabilizerCode resolve_code(const SweepConfig &c) {
    if (!c.code_file.empty()) {
        return import_code(read_text_file(c.code_file));
    }
    return builtin_code(c.code);
}

}  // namespace pqd
