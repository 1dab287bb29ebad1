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

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "pqd/codes.hpp"
#include "pqd/error.hpp"
#include "pqd/linalg.hpp"
#include "pqd/pauli.hpp"
#include "pqd/random.hpp"

namespace pqd {

enum class PerturbationKind { gue_local, uniform_xz, stabilizer_sum, custom };

inline std::string_view to_string(PerturbationKind kind) {
    switch (kind) {
        case PerturbationKind::gue_local: return "gue_local";
        case PerturbationKind::uniform_xz: return "uniform_xz";
        case PerturbationKind::stabilizer_sum: return "stabilizer_sum";
        case PerturbationKind::custom: return "custom";
    }
    return "custom";
}

inline PerturbationKind parse_perturbation_kind(std::string_view s) {
    if (s == "gue_local" || s == "gue") return PerturbationKind::gue_local;
    if (s == "uniform_xz") return PerturbationKind::uniform_xz;
    if (s == "stabilizer_sum") return PerturbationKind::stabilizer_sum;
    if (s == "custom") return PerturbationKind::custom;
    throw Error(ErrorKind::invalid_argument, "unknown perturbation kind \"" + std::string(s) + "\"");
}

struct PerturbationTerm {
    /// Ascending qubit indices; the first is the most significant local factor.
    std::vector<std::size_t> support;
    Matrix matrix;
};

/// V = sum_i V_i with each V_i a Hermitian operator on a few qubits.
struct Perturbation {
    PerturbationKind kind = PerturbationKind::custom;
    std::size_t n = 0;
    std::optional<std::uint64_t> seed;
    std::vector<PerturbationTerm> terms;

    std::size_t k_locality() const {
        std::size_t k = 0;
        for (const auto &t : terms) {
            k = std::max(k, t.support.size());
        }
        return k;
    }
};

inline double spectral_norm(const Matrix &h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// n single-qubit GUE terms, each rescaled to unit spectral norm.
inline Perturbation sample_gue_perturbation(Rng &rng, std::size_t n) {
    Perturbation v;
    v.kind = PerturbationKind::gue_local;
    v.n = n;
    for (std::size_t q = 0; q < n; ++q) {
        Matrix a(2, 2);
        for (Eigen::Index c = 0; c < 2; ++c) {
            for (Eigen::Index r = 0; r < 2; ++r) {
                double re = rng.normal();
                double im = rng.normal();
                a(r, c) = {re, im};
            }
        }
        Matrix h = 0.5 * (a + a.adjoint());
        h /= spectral_norm(h);
        v.terms.push_back({{q}, h});
    }
    return v;
}

inline Perturbation sample_gue_perturbation(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    Perturbation v = sample_gue_perturbation(rng, n);
    v.seed = seed;
    return v;
}

/// V = sum_i (X_i + Z_i).
inline Perturbation uniform_xz_perturbation(std::size_t n) {
    Perturbation v;
    v.kind = PerturbationKind::uniform_xz;
    v.n = n;
    Matrix xz(2, 2);
    xz << 1.0, 1.0, 1.0, -1.0;
    for (std::size_t q = 0; q < n; ++q) {
        v.terms.push_back({{q}, xz});
    }
    return v;
}

/// V = sum_a S_a, which leaves the codespace invariant.
inline Perturbation stabilizer_sum_perturbation(const StabilizerCode &code) {
    Perturbation v;
    v.kind = PerturbationKind::stabilizer_sum;
    v.n = code.n;
    for (const auto &s : code.stabilizers) {
        PerturbationTerm t;
        std::string local;
        for (std::size_t q = 0; q < code.n; ++q) {
            if (s.letter(q) != 'I') {
                t.support.push_back(q);
                local.push_back(s.letter(q));
            }
        }
        t.matrix = PauliString::from_string(local).to_dense();
        v.terms.push_back(std::move(t));
    }
    return v;
}

/// Adds coeff * (term embedded on n qubits) to h.
inline void accumulate_term(Matrix &h, std::size_t n, const PerturbationTerm &term, cplx coeff) {
    const std::size_t k = term.support.size();
    const std::size_t local_dim = std::size_t{1} << k;
    if (static_cast<std::size_t>(term.matrix.rows()) != local_dim ||
        static_cast<std::size_t>(term.matrix.cols()) != local_dim) {
        throw Error(ErrorKind::length_mismatch, "perturbation term matrix does not match its support");
    }
    std::vector<std::uint64_t> bits(k);
    std::uint64_t support_mask = 0;
    for (std::size_t s = 0; s < k; ++s) {
        if (term.support[s] >= n) {
            throw Error(ErrorKind::invalid_argument, "perturbation support outside the register");
        }
        bits[s] = std::uint64_t{1} << (n - 1 - term.support[s]);
        support_mask |= bits[s];
    }
    auto scatter = [&](std::size_t local) {
        std::uint64_t g = 0;
        for (std::size_t s = 0; s < k; ++s) {
            if ((local >> (k - 1 - s)) & 1U) {
                g |= bits[s];
            }
        }
        return g;
    };
    std::vector<std::uint64_t> offsets(local_dim);
    for (std::size_t l = 0; l < local_dim; ++l) {
        offsets[l] = scatter(l);
    }
    const std::size_t dim = std::size_t{1} << n;
    for (std::size_t base = 0; base < dim; ++base) {
        if ((base & support_mask) != 0) {
            continue;
        }
        for (std::size_t lc = 0; lc < local_dim; ++lc) {
            for (std::size_t lr = 0; lr < local_dim; ++lr) {
                cplx m = term.matrix(static_cast<Eigen::Index>(lr), static_cast<Eigen::Index>(lc));
                if (m != cplx{0.0, 0.0}) {
                    h(static_cast<Eigen::Index>(base | offsets[lr]), static_cast<Eigen::Index>(base | offsets[lc])) +=
                        coeff * m;
                }
            }
        }
    }
}

inline void check_dense_size(std::size_t n, std::size_t max_qubits) {
    if (n > max_qubits) {
        throw Error(ErrorKind::dimension_overflow,
                    "dense operators on " + std::to_string(n) + " qubits exceed limit " + std::to_string(max_qubits));
    }
}

/// Dense matrix of V.
inline Matrix perturbation_matrix(const Perturbation &v, std::size_t max_qubits = kMaxDenseQubits) {
    check_dense_size(v.n, max_qubits);
    const Eigen::Index dim = Eigen::Index{1} << v.n;
    Matrix m = Matrix::Zero(dim, dim);
    for (const auto &t : v.terms) {
        if (hermiticity_defect(t.matrix) > 1e-12) {
            throw Error(ErrorKind::not_hermitian, "perturbation term is not Hermitian");
        }
        accumulate_term(m, v.n, t, 1.0);
    }
    return m;
}

/// H0 = -sum_a S_a as a dense matrix.
inline Matrix stabilizer_hamiltonian(const StabilizerCode &code, std::size_t max_qubits = kMaxDenseQubits) {
    check_dense_size(code.n, max_qubits);
    const Eigen::Index dim = Eigen::Index{1} << code.n;
    Matrix h = Matrix::Zero(dim, dim);
    for (const auto &s : code.stabilizers) {
        const cplx c = -s.matrix_coefficient();
        for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim); ++i) {
            double sign = (std::popcount(i & s.z_mask()) & 1) != 0 ? -1.0 : 1.0;
            h(static_cast<Eigen::Index>(i ^ s.x_mask()), static_cast<Eigen::Index>(i)) += c * sign;
        }
    }
    return h;
}

/// H = -sum_a S_a + lambda * V.
inline Matrix build_hamiltonian(const StabilizerCode &code, const Perturbation &v, double lambda,
                                std::size_t max_qubits = kMaxDenseQubits) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorKind::invalid_argument, "perturbation strength must be finite and non-negative");
    }
    if (v.n != code.n) {
        throw Error(ErrorKind::length_mismatch, "perturbation and code act on different qubit counts");
    }
    Matrix h = stabilizer_hamiltonian(code, max_qubits);
    if (lambda != 0.0) {
        for (const auto &t : v.terms) {
            if (hermiticity_defect(t.matrix) > 1e-12) {
                throw Error(ErrorKind::not_hermitian, "perturbation term is not Hermitian");
            }
            accumulate_term(h, code.n, t, lambda);
        }
    }
    return h;
}

struct SpectralResult {
    Eigen::VectorXd eigenvalues;  // ascending
    Matrix eigenvectors;          // orthonormal columns
    double splitting = 0.0;       // |E1 - E0|
    std::optional<double> gap;    // E2 - E0 when at least three pairs were requested
    double max_residual = 0.0;    // max_i |H v_i - E_i v_i|
    double norm_bound = 0.0;      // upper bound on |H|
};

/// Lowest eigenpairs of a dense Hermitian matrix, phases fixed so the
/// largest-magnitude component of every eigenvector is real positive.
inline SpectralResult lowest_eigenpairs(const Matrix &h, std::size_t count) {
    if (hermiticity_defect(h) > 1e-10) {
        throw Error(ErrorKind::not_hermitian, "Hamiltonian is not Hermitian");
    }
    Eigenpairs ep = hermitian_lowest(h, count);
    SpectralResult r;
    r.eigenvalues = ep.values;
    r.eigenvectors = std::move(ep.vectors);
    for (Eigen::Index c = 0; c < r.eigenvectors.cols(); ++c) {
        fix_global_phase(r.eigenvectors.col(c));
    }
    if (count >= 2) {
        r.splitting = std::abs(r.eigenvalues[1] - r.eigenvalues[0]);
    }
    if (count >= 3) {
        r.gap = r.eigenvalues[2] - r.eigenvalues[0];
    }
    r.norm_bound = norm_bound(h);
    for (Eigen::Index c = 0; c < r.eigenvectors.cols(); ++c) {
        double res = (h * r.eigenvectors.col(c) - r.eigenvalues[c] * r.eigenvectors.col(c)).norm();
        r.max_residual = std::max(r.max_residual, res);
    }
    return r;
}

/// At an exact degeneracy of the two lowest levels, rotates the pair onto
/// the Z_L eigenbasis (Z_L = +1 first) to make the result reproducible.
inline void align_degenerate_pair(SpectralResult &r, const StabilizerCode &code, double tolerance = 1e-9) {
    if (r.eigenvectors.cols() < 2 || r.splitting > tolerance) {
        return;
    }
    Matrix pair = r.eigenvectors.leftCols(2);
    Matrix zpair(pair.rows(), 2);
    zpair.col(0) = code.logical_z.apply(pair.col(0));
    zpair.col(1) = code.logical_z.apply(pair.col(1));
    Matrix2 block = pair.adjoint() * zpair;
    Eigen::SelfAdjointEigenSolver<Matrix2> es(0.5 * (block + block.adjoint()));
    Matrix rotated = pair * es.eigenvectors();
    r.eigenvectors.col(0) = rotated.col(1);
    r.eigenvectors.col(1) = rotated.col(0);
    fix_global_phase(r.eigenvectors.col(0));
    fix_global_phase(r.eigenvectors.col(1));
}

/// Reduced propagator sum_{m not in codespace} |m><m| / (E0 - E_m^(0)).
///
/// The unperturbed spectrum comes from a full diagonalization of H0; its two
/// lowest levels span the codespace and are excluded.
inline Matrix reduced_propagator(const Eigenpairs &h0_spectrum, double e0) {
    const Eigen::Index dim = h0_spectrum.values.size();
    if (dim < 3) {
        throw Error(ErrorKind::invalid_argument, "unperturbed spectrum has no excited states");
    }
    Eigen::VectorXd weights = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index m = 2; m < dim; ++m) {
        double denom = e0 - h0_spectrum.values[m];
        if (std::abs(denom) < 1e-12) {
            throw Error(ErrorKind::numerical, "reduced propagator denominator vanishes outside the codespace");
        }
        weights[m] = 1.0 / denom;
    }
    const Matrix &v = h0_spectrum.vectors;
    return v * weights.asDiagonal() * v.adjoint();
}

inline Matrix reduced_propagator(const StabilizerCode &code, double e0) {
    return reduced_propagator(hermitian_full(stabilizer_hamiltonian(code)), e0);
}

/// Normalized sum_{j=0}^{order} (lambda G V)^j |codeword_branch>, with G the
/// reduced propagator anchored at `e0`.
///
/// When `e0` is omitted the exact perturbed ground energy is used.
inline Vector bw_truncated_state(const StabilizerCode &code, const Perturbation &v, double lambda, std::size_t order,
                                 int branch, std::optional<double> e0 = std::nullopt) {
    if (branch != 0 && branch != 1) {
        throw Error(ErrorKind::invalid_argument, "branch must be 0 or 1");
    }
    // H0 has gap 2 between the codespace and the first excited sector.
    if (!(lambda >= 0.0) || lambda >= 2.0) {
        throw Error(ErrorKind::invalid_argument, "perturbation strength must lie below the gap");
    }
    Matrix vm = perturbation_matrix(v);
    double anchor = 0.0;
    if (e0) {
        anchor = *e0;
    } else {
        anchor = lowest_eigenpairs(build_hamiltonian(code, v, lambda), 1).eigenvalues[0];
    }
    Matrix g = reduced_propagator(code, anchor);
    auto [c0, c1] = unperturbed_codewords(code);
    Vector term = branch == 0 ? c0 : c1;
    Vector sum = term;
    Matrix step = lambda * g * vm;
    for (std::size_t j = 1; j <= order; ++j) {
        term = step * term;
        sum += term;
    }
    return sum / sum.norm();
}

/// 1 - |P psi|^2 with P the projector onto the span of `subspace` columns.
inline double subspace_infidelity(const Matrix &subspace, const Vector &psi) {
    Vector overlaps = subspace.adjoint() * psi;
    return 1.0 - overlaps.squaredNorm() / psi.squaredNorm();
}

inline nlohmann::json to_json(const Perturbation &v) {
    nlohmann::json j;
    j["kind"] = std::string(to_string(v.kind));
    j["n"] = v.n;
    j["seed"] = v.seed ? nlohmann::json(*v.seed) : nlohmann::json(nullptr);
    j["terms"] = nlohmann::json::array();
    for (const auto &t : v.terms) {
        nlohmann::json jt;
        jt["support"] = t.support;
        nlohmann::json re = nlohmann::json::array();
        nlohmann::json im = nlohmann::json::array();
        for (Eigen::Index r = 0; r < t.matrix.rows(); ++r) {
            std::vector<double> rr;
            std::vector<double> ii;
            for (Eigen::Index c = 0; c < t.matrix.cols(); ++c) {
                rr.push_back(t.matrix(r, c).real());
                ii.push_back(t.matrix(r, c).imag());
            }
            re.push_back(rr);
            im.push_back(ii);
        }
        jt["real"] = re;
        jt["imag"] = im;
        j["terms"].push_back(jt);
    }
    return j;
}

inline Perturbation perturbation_from_json(const nlohmann::json &j) {
    Perturbation v;
    v.kind = parse_perturbation_kind(j.at("kind").get<std::string>());
    v.n = j.at("n").get<std::size_t>();
    if (!j.at("seed").is_null()) {
        v.seed = j.at("seed").get<std::uint64_t>();
    }
    for (const auto &jt : j.at("terms")) {
        PerturbationTerm t;
        t.support = jt.at("support").get<std::vector<std::size_t>>();
        const auto &re = jt.at("real");
        const auto &im = jt.at("imag");
        const auto dim = static_cast<Eigen::Index>(re.size());
        t.matrix.resize(dim, dim);
        for (Eigen::Index r = 0; r < dim; ++r) {
            for (Eigen::Index c = 0; c < dim; ++c) {
                t.matrix(r, c) = {re.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>(),
                                  im.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>()};
            }
        }
        v.terms.push_back(std::move(t));
    }
    return v;
}

}  // namespace pqd
