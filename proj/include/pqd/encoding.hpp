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

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "json.hpp"

#include "pqd/codes.hpp"
#include "pqd/error.hpp"
#include "pqd/linalg.hpp"
#include "pqd/random.hpp"
#include "pqd/spectral.hpp"

namespace pqd {

enum class Basis { X, Y, Z };

inline char to_char(Basis b) { return b == Basis::X ? 'X' : (b == Basis::Y ? 'Y' : 'Z'); }

inline Basis parse_basis(std::string_view s) {
    if (s == "X" || s == "x") return Basis::X;
    if (s == "Y" || s == "y") return Basis::Y;
    if (s == "Z" || s == "z") return Basis::Z;
    throw Error(ErrorKind::invalid_argument, "basis must be X, Y or Z");
}

inline const PauliString &logical_operator(const StabilizerCode &code, Basis b) {
    switch (b) {
        case Basis::X: return code.logical_x;
        case Basis::Y: return code.logical_y;
        case Basis::Z: return code.logical_z;
    }
    return code.logical_z;
}

/// Gauge-fixed codeword pair |W_k> = sum_k' alpha_kk' |psi_k'>, with
/// alpha = [[e^{i t0} cos t1,        e^{i(t0+t2)} sin t1],
///          [e^{i(t0+t3)} sin t1, -e^{i(t0+t2+t3)} cos t1]].
struct CodewordBasis {
    Vector omega0;
    Vector omega1;
    Matrix2 alpha;
    std::array<double, 4> t{};
};

inline Matrix2 gauge_matrix(const std::array<double, 4> &t) {
    const cplx i(0.0, 1.0);
    Matrix2 a;
    a(0, 0) = std::exp(i * t[0]) * std::cos(t[1]);
    a(0, 1) = std::exp(i * (t[0] + t[2])) * std::sin(t[1]);
    a(1, 0) = std::exp(i * (t[0] + t[3])) * std::sin(t[1]);
    a(1, 1) = -std::exp(i * (t[0] + t[2] + t[3])) * std::cos(t[1]);
    return a;
}

inline CodewordBasis basis_from_gauge(const Vector &psi0, const Vector &psi1, const std::array<double, 4> &t) {
    CodewordBasis b;
    b.t = t;
    b.alpha = gauge_matrix(t);
    b.omega0 = b.alpha(0, 0) * psi0 + b.alpha(0, 1) * psi1;
    b.omega1 = b.alpha(1, 0) * psi0 + b.alpha(1, 1) * psi1;
    return b;
}

inline double wrap_angle(double a) {
    double w = std::fmod(a, 2.0 * std::numbers::pi);
    return w < 0.0 ? w + 2.0 * std::numbers::pi : w;
}

/// Fixes the 2x2 gauge of the two lowest eigenvectors in closed form.
///
/// t0 = 0. (t1, t2) maximize <W0|Z_L|W0>: W0 is the top eigenvector of the
/// Z_L block in the span of psi0/psi1. t3 maximizes <W+|X_L|W+>, which makes
/// <W0|X_L|W1> real and non-negative.
inline CodewordBasis fix_gauge(const Vector &psi0, const Vector &psi1, const StabilizerCode &code) {
    Matrix pair(psi0.size(), 2);
    pair.col(0) = psi0;
    pair.col(1) = psi1;
    Matrix zpair(psi0.size(), 2);
    zpair.col(0) = code.logical_z.apply(psi0);
    zpair.col(1) = code.logical_z.apply(psi1);
    Matrix2 zblock = pair.adjoint() * zpair;
    Eigen::SelfAdjointEigenSolver<Matrix2> es(0.5 * (zblock + zblock.adjoint()));
    Eigen::Vector2cd top = es.eigenvectors().col(1);

    std::array<double, 4> t{};
    t[1] = std::atan2(std::abs(top[1]), std::abs(top[0]));
    t[2] = (std::abs(top[0]) > 0.0 && std::abs(top[1]) > 0.0) ? wrap_angle(std::arg(top[1]) - std::arg(top[0])) : 0.0;
    t[3] = 0.0;
    CodewordBasis trial = basis_from_gauge(psi0, psi1, t);
    cplx x01 = trial.omega0.dot(code.logical_x.apply(trial.omega1));
    t[3] = std::abs(x01) > 0.0 ? wrap_angle(-std::arg(x01)) : 0.0;
    return basis_from_gauge(psi0, psi1, t);
}

inline CodewordBasis fix_gauge(const SpectralResult &spectral, const StabilizerCode &code) {
    if (spectral.eigenvectors.cols() < 2) {
        throw Error(ErrorKind::invalid_argument, "gauge fixing needs the two lowest eigenvectors");
    }
    return fix_gauge(spectral.eigenvectors.col(0), spectral.eigenvectors.col(1), code);
}

struct LogicalAngles {
    double theta = 0.0;  // [0, pi]
    double phi = 0.0;    // [0, 2 pi]
};

/// theta ~ U[0, pi], phi ~ U[0, 2 pi], i.i.d.
inline std::vector<LogicalAngles> sample_logical_angles(Rng &rng, std::size_t count) {
    if (count == 0) {
        throw Error(ErrorKind::invalid_argument, "sample count must be positive");
    }
    std::vector<LogicalAngles> out(count);
    for (auto &a : out) {
        a.theta = rng.uniform(0.0, std::numbers::pi);
        a.phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return out;
}

/// cos(theta) |W0> + e^{i phi} sin(theta) |W1>.
inline Vector encode(const CodewordBasis &basis, double theta, double phi) {
    const cplx c1 = std::polar(std::sin(theta), phi);
    Vector psi = std::cos(theta) * basis.omega0 + c1 * basis.omega1;
    return psi / psi.norm();
}

/// Ideal decoder output f_Q on the Bloch sphere.
inline double target_expectation(Basis q, double theta, double phi) {
    switch (q) {
        case Basis::X: return std::sin(2.0 * theta) * std::cos(phi);
        case Basis::Y: return std::sin(2.0 * theta) * std::sin(phi);
        case Basis::Z: return std::cos(2.0 * theta);
    }
    return 0.0;
}

struct NoiseModel {
    std::size_t p = 0;
    std::vector<PauliString> errors;  // errors[0] is the identity when included
    std::vector<double> weights;
    /// Set when 2p + 1 > d, where recovery is no longer guaranteed.
    bool beyond_distance = false;
};

struct NoiseOptions {
    bool include_identity = true;
    /// Only errors of weight exactly p (plus the identity if requested).
    bool weight_exact = false;
};

inline NoiseModel make_noise_model(const StabilizerCode &code, std::size_t p, NoiseOptions options = {}) {
    NoiseModel model;
    model.p = p;
    model.beyond_distance = 2 * p + 1 > code.distance;
    if (options.include_identity || p == 0) {
        model.errors.push_back(PauliString::identity(code.n));
    }
    for (std::size_t w = options.weight_exact ? p : 1; w <= p; ++w) {
        if (w == 0) {
            continue;
        }
        auto batch = enumerate_paulis(code.n, w);
        model.errors.insert(model.errors.end(), batch.begin(), batch.end());
    }
    model.weights.assign(model.errors.size(), 1.0 / static_cast<double>(model.errors.size()));
    return model;
}

inline NoiseModel noiseless_model(std::size_t n) {
    NoiseModel model;
    model.errors.push_back(PauliString::identity(n));
    model.weights.push_back(1.0);
    return model;
}

struct LogicalSample {
    double theta = 0.0;
    double phi = 0.0;
    Vector state;
    std::size_t error_id = 0;
};

inline LogicalSample make_sample(const CodewordBasis &basis, double theta, double phi) {
    return {theta, phi, encode(basis, theta, phi), 0};
}

inline std::size_t draw_error(Rng &rng, const NoiseModel &model) {
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        acc += model.weights[i];
        if (u < acc) {
            return i;
        }
    }
    return model.weights.size() - 1;
}

/// Hits the sample's state with one drawn error and records which.
inline LogicalSample apply_noise(Rng &rng, const NoiseModel &model, const LogicalSample &sample) {
    if (model.errors.empty()) {
        throw Error(ErrorKind::invalid_argument, "noise model has no errors");
    }
    if (static_cast<std::size_t>(sample.state.size()) != (std::size_t{1} << model.errors.front().num_qubits())) {
        throw Error(ErrorKind::length_mismatch, "sample state does not match the noise model");
    }
    LogicalSample out = sample;
    out.error_id = draw_error(rng, model);
    out.state = model.errors[out.error_id].apply(sample.state);
    return out;
}

/// A labeled input; the statevector is rebuilt from the angles on demand.
struct SampleRecord {
    double theta = 0.0;
    double phi = 0.0;
    std::size_t error_id = 0;
};

/// Angle samples with per-sample error draws from `model`.
inline std::vector<SampleRecord> draw_samples(Rng &rng, std::size_t count, const NoiseModel &model) {
    auto angles = sample_logical_angles(rng, count);
    std::vector<SampleRecord> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = {angles[i].theta, angles[i].phi, draw_error(rng, model)};
    }
    return out;
}

inline nlohmann::json samples_to_json(const std::vector<SampleRecord> &samples, std::uint64_t seed) {
    nlohmann::json j;
    j["seed"] = seed;
    j["samples"] = nlohmann::json::array();
    for (const auto &s : samples) {
        j["samples"].push_back({s.theta, s.phi, s.error_id});
    }
    return j;
}

inline std::vector<SampleRecord> samples_from_json(const nlohmann::json &j) {
    std::vector<SampleRecord> out;
    for (const auto &row : j.at("samples")) {
        out.push_back({row.at(0).get<double>(), row.at(1).get<double>(), row.at(2).get<std::size_t>()});
    }
    return out;
}

}  // namespace pqd
