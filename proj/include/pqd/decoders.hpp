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

#include <cmath>
#include <concepts>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pqd/codes.hpp"
#include "pqd/encoding.hpp"
#include "pqd/error.hpp"
#include "pqd/linalg.hpp"

namespace pqd {

/// Anything whose expectation on the span of two states is a 2x2 block
/// B_kl = <u_k| O |u_l>.
template <class O>
concept LogicalBlockObservable = requires(const O &o, const Vector &v) {
    { o.block(v, v) } -> std::convertible_to<Matrix2>;
};

/// Columns C_b^dagger |W_k^(0)> for every syndrome b and codeword k.
///
/// With a correction for every syndrome these columns form a unitary, and
/// the error-corrected logical is F (I (x) q) F^dagger.
struct RecoveryFrame {
    Matrix columns;  // 2^n x 2^n, column 2b + k
    Vector codeword0;
    Vector codeword1;
};

inline std::shared_ptr<const RecoveryFrame> make_recovery_frame(const StabilizerCode &code) {
    auto [c0, c1] = unperturbed_codewords(code);
    const auto &table = code.correction_table;
    const Eigen::Index dim = c0.size();
    auto frame = std::make_shared<RecoveryFrame>();
    frame->columns.resize(dim, static_cast<Eigen::Index>(2 * table.size()));
    for (std::size_t b = 0; b < table.size(); ++b) {
        // Paulis in the table carry phase +1, so C^dagger = C.
        const PauliString &c = table.entries[b];
        frame->columns.col(static_cast<Eigen::Index>(2 * b)) = c.apply(c0);
        frame->columns.col(static_cast<Eigen::Index>(2 * b + 1)) = c.apply(c1);
    }
    frame->codeword0 = std::move(c0);
    frame->codeword1 = std::move(c1);
    return frame;
}

/// Naive (bare logical) or QEC-corrected decoding observable.
class DecoderObservable {
   public:
    enum class Kind { naive, qec };

    static DecoderObservable naive(const StabilizerCode &code, Basis basis) {
        DecoderObservable o;
        o.kind_ = Kind::naive;
        o.basis_ = basis;
        o.n_ = code.n;
        o.pauli_ = logical_operator(code, basis);
        return o;
    }

    static DecoderObservable qec(const StabilizerCode &code, Basis basis,
                                 std::shared_ptr<const RecoveryFrame> frame = nullptr) {
        if (code.correction_table.size() != (std::size_t{1} << code.stabilizers.size())) {
            throw Error(ErrorKind::invalid_argument, "correction table does not cover every syndrome");
        }
        DecoderObservable o;
        o.kind_ = Kind::qec;
        o.basis_ = basis;
        o.n_ = code.n;
        o.pauli_ = logical_operator(code, basis);
        o.frame_ = frame ? std::move(frame) : make_recovery_frame(code);
        const Vector &c0 = o.frame_->codeword0;
        const Vector &c1 = o.frame_->codeword1;
        Vector q0 = o.pauli_.apply(c0);
        Vector q1 = o.pauli_.apply(c1);
        o.logical_block_ << c0.dot(q0), c0.dot(q1), c1.dot(q0), c1.dot(q1);
        return o;
    }

    Kind kind() const noexcept { return kind_; }
    std::string_view label() const noexcept { return kind_ == Kind::naive ? "naive" : "qec"; }
    Basis basis() const noexcept { return basis_; }
    std::size_t num_qubits() const noexcept { return n_; }

    /// O |v>.
    Vector apply(const Vector &v) const {
        check_dim(v);
        if (kind_ == Kind::naive) {
            return pauli_.apply(v);
        }
        Vector a = frame_->columns.adjoint() * v;
        return frame_->columns * logical_mix(a);
    }

    /// B_kl = <u_k| O |u_l>.
    Matrix2 block(const Vector &u0, const Vector &u1) const {
        check_dim(u0);
        check_dim(u1);
        Matrix2 out;
        if (kind_ == Kind::naive) {
            Vector o0 = pauli_.apply(u0);
            Vector o1 = pauli_.apply(u1);
            out << u0.dot(o0), u0.dot(o1), u1.dot(o0), u1.dot(o1);
            return out;
        }
        Matrix u(u0.size(), 2);
        u.col(0) = u0;
        u.col(1) = u1;
        Matrix a = frame_->columns.adjoint() * u;
        Matrix qa(a.rows(), 2);
        qa.col(0) = logical_mix(a.col(0));
        qa.col(1) = logical_mix(a.col(1));
        return a.adjoint() * qa;
    }

    Matrix dense(std::size_t max_qubits = kMaxDenseQubits) const {
        if (n_ > max_qubits) {
            throw Error(ErrorKind::dimension_overflow, "dense observable exceeds qubit limit");
        }
        if (kind_ == Kind::naive) {
            return pauli_.to_dense(max_qubits);
        }
        const Matrix &f = frame_->columns;
        Matrix mixed(f.rows(), f.cols());
        for (Eigen::Index c = 0; c < f.rows(); ++c) {
            mixed.row(c) = logical_mix(f.row(c).adjoint()).adjoint();
        }
        // F (I (x) q) F^dagger; mixed holds F (I (x) q^dagger) row-wise, and q is Hermitian.
        return mixed * f.adjoint();
    }

    const PauliString &logical() const noexcept { return pauli_; }

   private:
    /// (I (x) q) a, acting on consecutive amplitude pairs.
    Vector logical_mix(const Vector &a) const {
        Vector out(a.size());
        for (Eigen::Index b = 0; b + 1 < a.size(); b += 2) {
            out[b] = logical_block_(0, 0) * a[b] + logical_block_(0, 1) * a[b + 1];
            out[b + 1] = logical_block_(1, 0) * a[b] + logical_block_(1, 1) * a[b + 1];
        }
        return out;
    }

    void check_dim(const Vector &v) const {
        if (static_cast<std::size_t>(v.size()) != (std::size_t{1} << n_)) {
            throw Error(ErrorKind::length_mismatch, "state dimension does not match the observable");
        }
    }

    Kind kind_ = Kind::naive;
    Basis basis_ = Basis::Z;
    std::size_t n_ = 0;
    PauliString pauli_;
    std::shared_ptr<const RecoveryFrame> frame_;
    Matrix2 logical_block_ = Matrix2::Zero();
};

/// <psi| O |psi> for a Hermitian observable; rejects a residual imaginary part.
template <LogicalBlockObservable O>
double expectation(const Vector &state, const O &obs, double imag_tolerance = 1e-10) {
    cplx v = obs.block(state, state)(0, 0);
    if (std::abs(v.imag()) > imag_tolerance * std::max(1.0, state.squaredNorm())) {
        throw Error(ErrorKind::numerical, "expectation has an imaginary part above tolerance");
    }
    return v.real();
}

enum class NoiseAveraging {
    /// Average every sample over the model's full error list.
    exhaustive,
    /// Use the error drawn for each sample (its error_id).
    per_sample,
};

/// Features g such that <Psi|O|Psi> = g . m for the block coordinates
/// m = (Re B00, Re B11, Re B01, Im B01).
inline Eigen::Vector4d sample_features(double theta, double phi) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double s2 = std::sin(2.0 * theta);
    return {c * c, s * s, s2 * std::cos(phi), -s2 * std::sin(phi)};
}

inline Eigen::Vector4d block_coordinates(const Matrix2 &b) {
    return {b(0, 0).real(), b(1, 1).real(), b(0, 1).real(), b(0, 1).imag()};
}

/// Quadratic-form summary of one error's share of the loss:
/// weight * (m^T A m - 2 b.m + c).
///
/// Evaluated in centered form weight * ((m - m*)^T A (m - m*) + r) with
/// m* = A^+ b, which avoids cancellation when the loss is near zero.
struct ErrorGroup {
    std::size_t error_id = 0;
    double weight = 0.0;
    Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    double c = 0.0;
    Eigen::Vector4d center = Eigen::Vector4d::Zero();
    double residual = 0.0;

    void finalize() {
        center = a.completeOrthogonalDecomposition().solve(b);
        residual = std::max(0.0, c - b.dot(center));
    }

    double loss(const Eigen::Vector4d &m) const {
        Eigen::Vector4d d = m - center;
        return weight * (d.dot(a * d) + residual);
    }
    Eigen::Vector4d gradient(const Eigen::Vector4d &m) const { return 2.0 * weight * (a * (m - center)); }
};

inline std::vector<ErrorGroup> error_groups(std::span<const SampleRecord> samples, const NoiseModel &noise, Basis q,
                                            NoiseAveraging mode) {
    if (samples.empty()) {
        throw Error(ErrorKind::invalid_argument, "estimator needs at least one sample");
    }
    const std::size_t m = noise.errors.size();
    std::vector<ErrorGroup> groups(m);
    std::vector<std::size_t> counts(m, 0);
    Eigen::Matrix4d a_all = Eigen::Matrix4d::Zero();
    Eigen::Vector4d b_all = Eigen::Vector4d::Zero();
    double c_all = 0.0;
    for (const auto &s : samples) {
        Eigen::Vector4d g = sample_features(s.theta, s.phi);
        double f = target_expectation(q, s.theta, s.phi);
        if (mode == NoiseAveraging::exhaustive) {
            a_all += g * g.transpose();
            b_all += f * g;
            c_all += f * f;
        } else {
            if (s.error_id >= m) {
                throw Error(ErrorKind::invalid_argument, "sample error_id outside the noise model");
            }
            auto &grp = groups[s.error_id];
            grp.a += g * g.transpose();
            grp.b += f * g;
            grp.c += f * f;
            ++counts[s.error_id];
        }
    }
    const double total = static_cast<double>(samples.size());
    std::vector<ErrorGroup> out;
    for (std::size_t e = 0; e < m; ++e) {
        ErrorGroup g;
        g.error_id = e;
        if (mode == NoiseAveraging::exhaustive) {
            g.weight = noise.weights[e];
            g.a = a_all / total;
            g.b = b_all / total;
            g.c = c_all / total;
        } else {
            if (counts[e] == 0) {
                continue;
            }
            const double k = static_cast<double>(counts[e]);
            g.weight = k / total;
            g.a = groups[e].a / k;
            g.b = groups[e].b / k;
            g.c = groups[e].c / k;
        }
        g.finalize();
        out.push_back(g);
    }
    return out;
}

struct ErrorEstimate {
    double epsilon = 0.0;
    double standard_error = 0.0;
};

/// Monte-Carlo estimate of the mean-square decoding error
///   E_a mean_mu (<Psi_mu| P_a O P_a |Psi_mu> - f_Q(theta_mu, phi_mu))^2.
///
/// Each error contributes through the 2x2 block of O between P_a|W0> and
/// P_a|W1>, which is exact for states in the codeword span.
template <LogicalBlockObservable O>
ErrorEstimate generalization_error(const O &obs, Basis q, const CodewordBasis &basis,
                                   std::span<const SampleRecord> samples, const NoiseModel &noise,
                                   NoiseAveraging mode = NoiseAveraging::exhaustive) {
    if (samples.empty()) {
        throw Error(ErrorKind::invalid_argument, "estimator needs at least one sample");
    }
    const std::size_t m = noise.errors.size();
    std::vector<bool> needed(m, mode == NoiseAveraging::exhaustive);
    if (mode == NoiseAveraging::per_sample) {
        for (const auto &s : samples) {
            if (s.error_id >= m) {
                throw Error(ErrorKind::invalid_argument, "sample error_id outside the noise model");
            }
            needed[s.error_id] = true;
        }
    }
    std::vector<Eigen::Vector4d> coords(m, Eigen::Vector4d::Zero());
    for (std::size_t e = 0; e < m; ++e) {
        if (needed[e]) {
            const auto &err = noise.errors[e];
            coords[e] = block_coordinates(obs.block(err.apply(basis.omega0), err.apply(basis.omega1)));
        }
    }
    CompensatedSum sum;
    CompensatedSum sum_sq;
    std::vector<double> values(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto &s = samples[i];
        Eigen::Vector4d g = sample_features(s.theta, s.phi);
        double f = target_expectation(q, s.theta, s.phi);
        double v = 0.0;
        if (mode == NoiseAveraging::exhaustive) {
            CompensatedSum acc;
            for (std::size_t e = 0; e < m; ++e) {
                double r = g.dot(coords[e]) - f;
                acc.add(noise.weights[e] * r * r);
            }
            v = acc.value();
        } else {
            double r = g.dot(coords[s.error_id]) - f;
            v = r * r;
        }
        values[i] = v;
        sum.add(v);
    }
    const double count = static_cast<double>(samples.size());
    ErrorEstimate out;
    out.epsilon = sum.value() / count;
    if (samples.size() > 1) {
        for (double v : values) {
            double d = v - out.epsilon;
            sum_sq.add(d * d);
        }
        out.standard_error = std::sqrt(sum_sq.value() / (count - 1.0) / count);
    }
    return out;
}

inline ErrorEstimate generalization_error(const DecoderObservable &obs, const CodewordBasis &basis,
                                          std::span<const SampleRecord> samples, const NoiseModel &noise,
                                          NoiseAveraging mode = NoiseAveraging::exhaustive) {
    return generalization_error(obs, obs.basis(), basis, samples, noise, mode);
}

}  // namespace pqd
