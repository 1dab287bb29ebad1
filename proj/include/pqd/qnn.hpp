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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "pqd/decoders.hpp"
#include "pqd/encoding.hpp"
#include "pqd/error.hpp"
#include "pqd/linalg.hpp"
#include "pqd/optimizer.hpp"
#include "pqd/random.hpp"

namespace pqd {

inline constexpr int kGateParams = 15;

namespace detail {

inline Matrix2 single_pauli(int a) {
    Matrix2 m = Matrix2::Zero();
    const cplx i(0.0, 1.0);
    switch (a) {
        case 0: m << 1.0, 0.0, 0.0, 1.0; break;
        case 1: m << 0.0, 1.0, 1.0, 0.0; break;
        case 2: m << 0.0, -i, i, 0.0; break;
        default: m << 1.0, 0.0, 0.0, -1.0; break;
    }
    return m;
}

/// sigma_a (x) sigma_b for generator index p = 4a + b - 1, skipping I (x) I.
inline const std::array<Matrix4, kGateParams> &gate_generators() {
    static const std::array<Matrix4, kGateParams> table = [] {
        std::array<Matrix4, kGateParams> t;
        for (int p = 0; p < kGateParams; ++p) {
            int a = (p + 1) / 4;
            int b = (p + 1) % 4;
            Matrix2 sa = single_pauli(a);
            Matrix2 sb = single_pauli(b);
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    t[p](r, c) = sa(r / 2, c / 2) * sb(r % 2, c % 2);
                }
            }
        }
        return t;
    }();
    return table;
}

inline double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

}  // namespace detail

/// Index of the sigma_a (x) sigma_b angle (a, b in 0..3 for I, X, Y, Z).
inline int gate_param_index(int a, int b) {
    if (a < 0 || a > 3 || b < 0 || b > 3 || (a == 0 && b == 0)) {
        throw Error(ErrorKind::invalid_argument, "gate generator must be a non-identity two-qubit Pauli");
    }
    return 4 * a + b - 1;
}

/// exp(i H) with H = sum_p phi_p sigma_p, kept with its eigendecomposition
/// for differentiation.
struct GateExponential {
    Matrix4 unitary;
    Matrix4 vectors;
    Eigen::Vector4d values;
};

inline GateExponential gate_exponential(std::span<const double> angles) {
    if (angles.size() != kGateParams) {
        throw Error(ErrorKind::length_mismatch, "two-qubit gate needs 15 angles");
    }
    const auto &gens = detail::gate_generators();
    Matrix4 h = Matrix4::Zero();
    for (int p = 0; p < kGateParams; ++p) {
        if (!std::isfinite(angles[p])) {
            throw Error(ErrorKind::invalid_argument, "gate angle is not finite");
        }
        h += angles[p] * gens[p];
    }
    Eigen::SelfAdjointEigenSolver<Matrix4> es(h);
    GateExponential g;
    g.values = es.eigenvalues();
    g.vectors = es.eigenvectors();
    Eigen::Vector4cd phases;
    for (int k = 0; k < 4; ++k) {
        phases[k] = std::polar(1.0, g.values[k]);
    }
    g.unitary = g.vectors * phases.asDiagonal() * g.vectors.adjoint();
    return g;
}

/// exp(i sum phi_ab sigma_a (x) sigma_b); the identity coefficient is fixed at 0.
inline Matrix4 two_qubit_gate(std::span<const double> angles) { return gate_exponential(angles).unitary; }

enum class Topology { brickwork_conv, trans_inv };

inline std::string_view to_string(Topology t) { return t == Topology::brickwork_conv ? "brickwork_conv" : "trans_inv"; }

inline Topology parse_topology(std::string_view s) {
    if (s == "brickwork_conv") return Topology::brickwork_conv;
    if (s == "trans_inv") return Topology::trans_inv;
    throw Error(ErrorKind::invalid_argument, "invalid topology: " + std::string(s));
}

struct GateSite {
    std::size_t layer = 0;
    std::size_t q0 = 0;  // first tensor factor
    std::size_t q1 = 0;
    std::size_t group = 0;
};

struct CircuitOptions {
    std::size_t output_qubit = 0;
    /// Convolutional reduction layers; 0 reduces all the way to one qubit.
    std::size_t decoder_layers = 1;
};

struct QnnModel {
    std::size_t n = 0;
    std::size_t depth = 0;  // d_C
    Topology topology = Topology::brickwork_conv;
    std::size_t output_qubit = 0;
    std::size_t decoder_layers = 1;
    std::vector<GateSite> sites;  // in application order
    Eigen::VectorXd params;       // 15 per group

    std::size_t num_groups() const { return static_cast<std::size_t>(params.size()) / kGateParams; }
    std::size_t num_params() const { return static_cast<std::size_t>(params.size()); }

    std::span<const double> group_angles(std::size_t g) const {
        return {params.data() + g * kGateParams, static_cast<std::size_t>(kGateParams)};
    }

    /// Applies U_Q to every column of `states`.
    void apply(Matrix &states) const;

    /// B_kl = <u_k| U^dagger Z_out U |u_l>.
    Matrix2 block(const Vector &u0, const Vector &u1) const;
};

namespace detail {

inline std::size_t qubit_mask(std::size_t n, std::size_t q) { return std::size_t{1} << (n - 1 - q); }

inline void apply_gate(Matrix &states, const Matrix4 &u, std::size_t n, std::size_t q0, std::size_t q1) {
    const std::size_t m0 = qubit_mask(n, q0);
    const std::size_t m1 = qubit_mask(n, q1);
    const std::size_t dim = static_cast<std::size_t>(states.rows());
    for (Eigen::Index c = 0; c < states.cols(); ++c) {
        cplx *v = states.col(c).data();
        for (std::size_t base = 0; base < dim; ++base) {
            if (base & (m0 | m1)) {
                continue;
            }
            const std::size_t r[4] = {base, base | m1, base | m0, base | m0 | m1};
            const cplx a[4] = {v[r[0]], v[r[1]], v[r[2]], v[r[3]]};
            for (int y = 0; y < 4; ++y) {
                v[r[y]] = u(y, 0) * a[0] + u(y, 1) * a[1] + u(y, 2) * a[2] + u(y, 3) * a[3];
            }
        }
    }
}

/// sum over amplitude quadruples and columns of a[r_y] conj(c[r_x]).
inline Matrix4 gate_outer(const Matrix &a, const Matrix &c, std::size_t n, std::size_t q0, std::size_t q1) {
    const std::size_t m0 = qubit_mask(n, q0);
    const std::size_t m1 = qubit_mask(n, q1);
    const std::size_t dim = static_cast<std::size_t>(a.rows());
    Matrix4 out = Matrix4::Zero();
    for (Eigen::Index col = 0; col < a.cols(); ++col) {
        const cplx *av = a.col(col).data();
        const cplx *cv = c.col(col).data();
        for (std::size_t base = 0; base < dim; ++base) {
            if (base & (m0 | m1)) {
                continue;
            }
            const std::size_t r[4] = {base, base | m1, base | m0, base | m0 | m1};
            for (int y = 0; y < 4; ++y) {
                for (int x = 0; x < 4; ++x) {
                    out(y, x) += av[r[y]] * std::conj(cv[r[x]]);
                }
            }
        }
    }
    return out;
}

inline void apply_z(Matrix &states, std::size_t n, std::size_t q) {
    const std::size_t m = qubit_mask(n, q);
    for (Eigen::Index r = 0; r < states.rows(); ++r) {
        if (static_cast<std::size_t>(r) & m) {
            states.row(r) *= -1.0;
        }
    }
}

inline std::vector<GateExponential> gate_cache(const QnnModel &model, const Eigen::VectorXd &params) {
    std::vector<GateExponential> out;
    out.reserve(model.num_groups());
    for (std::size_t g = 0; g < model.num_groups(); ++g) {
        out.push_back(gate_exponential({params.data() + g * kGateParams, static_cast<std::size_t>(kGateParams)}));
    }
    return out;
}

inline void check_model_dim(const QnnModel &model, Eigen::Index rows) {
    if (static_cast<std::size_t>(rows) != (std::size_t{1} << model.n)) {
        throw Error(ErrorKind::length_mismatch, "state dimension does not match the circuit");
    }
}

}  // namespace detail

inline void QnnModel::apply(Matrix &states) const {
    detail::check_model_dim(*this, states.rows());
    auto gates = detail::gate_cache(*this, params);
    for (const auto &s : sites) {
        detail::apply_gate(states, gates[s.group].unitary, n, s.q0, s.q1);
    }
}

inline Matrix2 QnnModel::block(const Vector &u0, const Vector &u1) const {
    Matrix s(u0.size(), 2);
    s.col(0) = u0;
    s.col(1) = u1;
    apply(s);
    Matrix zs = s;
    detail::apply_z(zs, n, output_qubit);
    return s.adjoint() * zs;
}

/// Brickwork C_Q of depth d_C followed by a convolutional reduction D_Q.
///
/// Each depth unit is an even-bond layer (0,1),(2,3),... and an odd-bond
/// layer (1,2),(3,4),...; the reduction pairs active qubits and discards the
/// higher index of each pair (the output qubit is always kept). Reduction
/// gates outside the output's causal cone are dropped.
inline QnnModel build_circuit(std::size_t n, std::size_t depth, Topology topology, CircuitOptions options = {}) {
    if (n < 2) {
        throw Error(ErrorKind::invalid_argument, "circuit needs at least two qubits");
    }
    if (depth < 1) {
        throw Error(ErrorKind::invalid_argument, "circuit depth must be at least 1");
    }
    if (options.output_qubit >= n) {
        throw Error(ErrorKind::invalid_argument, "output qubit out of range");
    }
    if (n > kMaxDenseQubits) {
        throw Error(ErrorKind::dimension_overflow, "circuit exceeds the statevector qubit limit");
    }
    QnnModel m;
    m.n = n;
    m.depth = depth;
    m.topology = topology;
    m.output_qubit = options.output_qubit;
    m.decoder_layers = options.decoder_layers;
    std::size_t groups = 0;
    std::size_t layer = 0;
    for (std::size_t d = 0; d < depth; ++d) {
        for (std::size_t parity = 0; parity < 2; ++parity, ++layer) {
            for (std::size_t q = parity; q + 1 < n; q += 2) {
                std::size_t g = topology == Topology::trans_inv ? d : groups++;
                m.sites.push_back({layer, q, q + 1, g});
            }
        }
    }
    if (topology == Topology::trans_inv) {
        groups = depth;
    }

    std::vector<GateSite> reduction;
    std::vector<std::size_t> active(n);
    for (std::size_t q = 0; q < n; ++q) {
        active[q] = q;
    }
    for (std::size_t r = 0; active.size() > 1 && (options.decoder_layers == 0 || r < options.decoder_layers);
         ++r, ++layer) {
        std::vector<std::size_t> next;
        for (std::size_t i = 0; i < active.size(); i += 2) {
            if (i + 1 == active.size()) {
                next.push_back(active[i]);
                continue;
            }
            std::size_t a = active[i];
            std::size_t b = active[i + 1];
            reduction.push_back({layer, a, b, r});
            next.push_back(b == options.output_qubit ? b : a);
        }
        active = std::move(next);
    }
    std::vector<bool> cone(n, false);
    cone[options.output_qubit] = true;
    std::vector<GateSite> kept;
    for (auto it = reduction.rbegin(); it != reduction.rend(); ++it) {
        if (cone[it->q0] || cone[it->q1]) {
            cone[it->q0] = cone[it->q1] = true;
            kept.push_back(*it);
        }
    }
    std::vector<std::size_t> layer_group;
    for (auto it = kept.rbegin(); it != kept.rend(); ++it) {
        GateSite s = *it;
        if (topology == Topology::trans_inv) {
            if (layer_group.size() <= s.group) {
                layer_group.resize(s.group + 1, SIZE_MAX);
            }
            if (layer_group[s.group] == SIZE_MAX) {
                layer_group[s.group] = groups++;
            }
            s.group = layer_group[s.group];
        } else {
            s.group = groups++;
        }
        m.sites.push_back(s);
    }
    m.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(groups * kGateParams));
    return m;
}

/// Uniform angles in [0, 2 pi).
inline void randomize_params(QnnModel &model, Rng &rng) {
    for (Eigen::Index i = 0; i < model.params.size(); ++i) {
        model.params[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
}

/// <psi| U^dagger Z_out U |psi>.
inline double forward(const QnnModel &model, const Vector &state) {
    detail::check_model_dim(model, state.size());
    Matrix s = state;
    model.apply(s);
    const std::size_t m = detail::qubit_mask(model.n, model.output_qubit);
    double out = 0.0;
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        double p = std::norm(s(r, 0));
        out += (static_cast<std::size_t>(r) & m) ? -p : p;
    }
    return out;
}

/// Dense U_Q, for small-n checks.
inline Matrix circuit_unitary(const QnnModel &model) {
    if (model.n > 10) {
        throw Error(ErrorKind::dimension_overflow, "dense circuit unitary exceeds qubit limit");
    }
    const Eigen::Index dim = Eigen::Index{1} << model.n;
    Matrix u = Matrix::Identity(dim, dim);
    model.apply(u);
    return u;
}

enum class GradientMode { analytic, finite_difference };

inline std::string_view to_string(GradientMode g) {
    return g == GradientMode::analytic ? "analytic" : "finite_difference";
}

inline GradientMode parse_gradient_mode(std::string_view s) {
    if (s == "analytic") return GradientMode::analytic;
    if (s == "finite_difference") return GradientMode::finite_difference;
    throw Error(ErrorKind::invalid_argument, "gradient mode must be analytic or finite_difference");
}

/// Training loss of a circuit structure as a function of its parameters.
///
/// Each error in the noise model reduces the sample average to a quadratic
/// form in the 2x2 output block of the corrupted codeword pair, so one
/// evaluation simulates two columns per error regardless of sample count.
class QnnObjective {
   public:
    QnnObjective(const QnnModel &structure, const CodewordBasis &basis, std::span<const SampleRecord> samples,
                 const NoiseModel &noise, Basis q, NoiseAveraging mode = NoiseAveraging::exhaustive)
        : model_(structure), groups_(error_groups(samples, noise, q, mode)) {
        detail::check_model_dim(model_, basis.omega0.size());
        inputs_.resize(basis.omega0.size(), static_cast<Eigen::Index>(2 * groups_.size()));
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            const auto &err = noise.errors[groups_[g].error_id];
            inputs_.col(static_cast<Eigen::Index>(2 * g)) = err.apply(basis.omega0);
            inputs_.col(static_cast<Eigen::Index>(2 * g + 1)) = err.apply(basis.omega1);
        }
    }

    const QnnModel &structure() const noexcept { return model_; }
    std::size_t dimension() const noexcept { return model_.num_params(); }

    double value(const Eigen::VectorXd &params) const {
        check_params(params);
        auto gates = detail::gate_cache(model_, params);
        Matrix s = inputs_;
        for (const auto &site : model_.sites) {
            detail::apply_gate(s, gates[site.group].unitary, model_.n, site.q0, site.q1);
        }
        Matrix zs = s;
        detail::apply_z(zs, model_.n, model_.output_qubit);
        double total = 0.0;
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            total += groups_[g].loss(coords(s, zs, g));
        }
        return total;
    }

    /// Loss and its exact gradient by a reverse sweep over the gates.
    ///
    /// dU/dphi_p = V (L o V^dagger sigma_p V) V^dagger with the divided
    /// differences L_jk = (e^{i d_j} - e^{i d_k}) / (d_j - d_k).
    double value_and_gradient(const Eigen::VectorXd &params, Eigen::VectorXd &grad) const {
        check_params(params);
        auto gates = detail::gate_cache(model_, params);
        Matrix s = inputs_;
        for (const auto &site : model_.sites) {
            detail::apply_gate(s, gates[site.group].unitary, model_.n, site.q0, site.q1);
        }
        Matrix zs = s;
        detail::apply_z(zs, model_.n, model_.output_qubit);

        // dL = 2 Re sum_kl G_kl <b_k| dU |a_l> where b = Z U u, per error group.
        Matrix c(s.rows(), s.cols());
        double total = 0.0;
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            Eigen::Vector4d m = coords(s, zs, g);
            total += groups_[g].loss(m);
            Eigen::Vector4d gm = groups_[g].gradient(m);
            Matrix2 gk;
            gk(0, 0) = gm[0];
            gk(1, 1) = gm[1];
            gk(0, 1) = cplx(gm[2], -gm[3]) * 0.5;
            gk(1, 0) = std::conj(gk(0, 1));
            const Eigen::Index c0 = static_cast<Eigen::Index>(2 * g);
            c.middleCols(c0, 2) = zs.middleCols(c0, 2) * gk.conjugate();
        }

        grad = Eigen::VectorXd::Zero(params.size());
        const auto &gens = detail::gate_generators();
        for (auto it = model_.sites.rbegin(); it != model_.sites.rend(); ++it) {
            const GateExponential &ge = gates[it->group];
            Matrix4 udag = ge.unitary.adjoint();
            detail::apply_gate(s, udag, model_.n, it->q0, it->q1);
            Matrix4 r = detail::gate_outer(s, c, model_.n, it->q0, it->q1);
            detail::apply_gate(c, udag, model_.n, it->q0, it->q1);

            Matrix4 k = ge.vectors.adjoint() * r * ge.vectors;
            Matrix4 w;
            for (int j = 0; j < 4; ++j) {
                for (int l = 0; l < 4; ++l) {
                    const double dj = ge.values[j];
                    const double dl = ge.values[l];
                    cplx lam = cplx(0.0, 1.0) * std::polar(1.0, 0.5 * (dj + dl)) * detail::sinc(0.5 * (dj - dl));
                    w(j, l) = lam * k(l, j);
                }
            }
            Matrix4 y = ge.vectors * w.transpose() * ge.vectors.adjoint();
            const Eigen::Index off = static_cast<Eigen::Index>(it->group * kGateParams);
            for (int p = 0; p < kGateParams; ++p) {
                grad[off + p] += 2.0 * (gens[p].cwiseProduct(y.transpose())).sum().real();
            }
        }
        return total;
    }

    /// Central differences with step h.
    Eigen::VectorXd finite_difference_gradient(const Eigen::VectorXd &params, double h = 1e-5) const {
        Eigen::VectorXd grad(params.size());
        Eigen::VectorXd x = params;
        for (Eigen::Index i = 0; i < params.size(); ++i) {
            x[i] = params[i] + h;
            double fp = value(x);
            x[i] = params[i] - h;
            double fm = value(x);
            x[i] = params[i];
            grad[i] = (fp - fm) / (2.0 * h);
        }
        return grad;
    }

    double value_and_gradient(const Eigen::VectorXd &params, Eigen::VectorXd &grad, GradientMode mode) const {
        if (mode == GradientMode::analytic) {
            return value_and_gradient(params, grad);
        }
        grad = finite_difference_gradient(params);
        return value(params);
    }

   private:
    Eigen::Vector4d coords(const Matrix &s, const Matrix &zs, std::size_t g) const {
        const Eigen::Index c0 = static_cast<Eigen::Index>(2 * g);
        Matrix2 b = s.middleCols(c0, 2).adjoint() * zs.middleCols(c0, 2);
        return block_coordinates(b);
    }

    void check_params(const Eigen::VectorXd &params) const {
        if (params.size() != static_cast<Eigen::Index>(model_.num_params())) {
            throw Error(ErrorKind::length_mismatch, "parameter vector does not match the circuit");
        }
    }

    QnnModel model_;
    std::vector<ErrorGroup> groups_;
    Matrix inputs_;
};

inline double loss(const QnnModel &model, const CodewordBasis &basis, std::span<const SampleRecord> samples,
                   const NoiseModel &noise, Basis q = Basis::X, NoiseAveraging mode = NoiseAveraging::exhaustive) {
    return QnnObjective(model, basis, samples, noise, q, mode).value(model.params);
}

inline Eigen::VectorXd gradient(const QnnModel &model, const CodewordBasis &basis,
                                std::span<const SampleRecord> samples, const NoiseModel &noise, Basis q = Basis::X,
                                GradientMode gmode = GradientMode::finite_difference,
                                NoiseAveraging mode = NoiseAveraging::exhaustive) {
    QnnObjective obj(model, basis, samples, noise, q, mode);
    Eigen::VectorXd g;
    obj.value_and_gradient(model.params, g, gmode);
    return g;
}

enum class OptimizerKind { bfgs, sgd };

inline std::string_view to_string(OptimizerKind o) { return o == OptimizerKind::bfgs ? "bfgs" : "sgd"; }

inline OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "bfgs") return OptimizerKind::bfgs;
    if (s == "sgd") return OptimizerKind::sgd;
    throw Error(ErrorKind::invalid_argument, "optimizer must be bfgs or sgd");
}

struct TrainConfig {
    Basis basis = Basis::X;
    std::size_t max_iterations = 100000;
    double tolerance = 1e-15;
    std::size_t restarts = 3;
    std::uint64_t seed = 0;
    GradientMode gradient = GradientMode::analytic;
    OptimizerKind optimizer = OptimizerKind::bfgs;
    SgdOptions sgd{};
    NoiseAveraging averaging = NoiseAveraging::exhaustive;
    /// Extra starting points tried before the random restarts.
    std::vector<Eigen::VectorXd> warm_starts;
};

struct TrainReport {
    double final_loss = 0.0;
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
    double wall_time = 0.0;  // seconds
    bool converged = false;
    std::string status;
    std::size_t starts = 0;
    std::size_t best_start = 0;
    /// Selection score of the kept start (validation loss if given).
    double selection_loss = 0.0;
};

inline nlohmann::json to_json(const TrainConfig &c) {
    return {{"basis", std::string(1, to_char(c.basis))},
            {"max_iterations", c.max_iterations},
            {"tolerance", c.tolerance},
            {"restarts", c.restarts},
            {"seed", c.seed},
            {"gradient", to_string(c.gradient)},
            {"optimizer", to_string(c.optimizer)},
            {"averaging", c.averaging == NoiseAveraging::exhaustive ? "exhaustive" : "per_sample"},
            {"sgd_epochs", c.sgd.epochs},
            {"sgd_batch_size", c.sgd.batch_size},
            {"sgd_learning_rate", c.sgd.learning_rate}};
}

namespace detail {

inline OptimizeResult run_optimizer(const QnnObjective &obj, const TrainConfig &config,
                                    std::span<const SampleRecord> samples, const CodewordBasis &basis,
                                    const NoiseModel &noise, Eigen::VectorXd x0) {
    Objective f = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
        return obj.value_and_gradient(x, g, config.gradient);
    };
    if (config.optimizer == OptimizerKind::bfgs) {
        BfgsOptions opts;
        opts.max_iterations = config.max_iterations;
        opts.gradient_tolerance = config.tolerance;
        return minimize_bfgs(f, std::move(x0), opts);
    }
    const std::size_t batch = std::max<std::size_t>(1, config.sgd.batch_size);
    const std::size_t num_batches = (samples.size() + batch - 1) / batch;
    std::vector<QnnObjective> batches;
    for (std::size_t b = 0; b < num_batches; ++b) {
        std::size_t lo = b * batch;
        std::size_t len = std::min(batch, samples.size() - lo);
        batches.emplace_back(obj.structure(), basis, samples.subspan(lo, len), noise, config.basis,
                             config.averaging);
    }
    auto fb = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g, std::size_t b) {
        return batches[b].value_and_gradient(x, g, config.gradient);
    };
    return minimize_sgd(fb, num_batches, f, std::move(x0), config.sgd);
}

}  // namespace detail

struct ValidationSet {
    std::span<const SampleRecord> samples;
    const NoiseModel *noise = nullptr;
};

/// Trains from the warm starts and `restarts` seeded random initializations,
/// keeping the start with the lowest validation loss (training loss when no
/// validation set is given).
inline std::pair<QnnModel, TrainReport> train(const QnnModel &structure, const CodewordBasis &basis,
                                              std::span<const SampleRecord> train_samples, const NoiseModel &noise,
                                              const TrainConfig &config,
                                              std::optional<ValidationSet> validation = std::nullopt) {
    const auto start = std::chrono::steady_clock::now();
    QnnObjective obj(structure, basis, train_samples, noise, config.basis, config.averaging);
    std::optional<QnnObjective> vobj;
    if (validation) {
        vobj.emplace(structure, basis, validation->samples, validation->noise ? *validation->noise : noise,
                     config.basis, config.averaging);
    }
    std::vector<Eigen::VectorXd> inits;
    for (const auto &w : config.warm_starts) {
        if (w.size() != static_cast<Eigen::Index>(structure.num_params())) {
            throw Error(ErrorKind::length_mismatch, "warm start does not match the circuit");
        }
        inits.push_back(w);
    }
    for (std::size_t r = 0; r < config.restarts; ++r) {
        QnnModel m = structure;
        Rng rng(hash_combine(config.seed, r));
        randomize_params(m, rng);
        inits.push_back(m.params);
    }
    if (inits.empty()) {
        throw Error(ErrorKind::config, "training needs at least one starting point");
    }
    QnnModel best = structure;
    TrainReport report;
    report.starts = inits.size();
    bool have = false;
    for (std::size_t i = 0; i < inits.size(); ++i) {
        OptimizeResult res = detail::run_optimizer(obj, config, train_samples, basis, noise, inits[i]);
        if (!std::isfinite(res.value)) {
            throw Error(ErrorKind::numerical, "training loss became non-finite");
        }
        double score = vobj ? vobj->value(res.x) : res.value;
        if (!have || score < report.selection_loss) {
            have = true;
            best.params = res.x;
            report.final_loss = std::max(0.0, res.value);
            report.iterations = res.iterations;
            report.gradient_norm = res.gradient_norm;
            report.converged = res.converged;
            report.status = res.status;
            report.best_start = i;
            report.selection_loss = score;
        }
    }
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {best, report};
}

/// Mean-square decoding error of the trained circuit on held-out samples.
inline ErrorEstimate evaluate(const QnnModel &model, const CodewordBasis &basis,
                              std::span<const SampleRecord> samples, const NoiseModel &noise, Basis q = Basis::X,
                              NoiseAveraging mode = NoiseAveraging::exhaustive) {
    return generalization_error(model, q, basis, samples, noise, mode);
}

inline nlohmann::json to_json(const QnnModel &m, std::optional<std::uint64_t> seed = std::nullopt,
                              const TrainConfig *config = nullptr) {
    nlohmann::json j;
    j["format"] = "pqd-qnn";
    j["topology"] = to_string(m.topology);
    j["n"] = m.n;
    j["depth"] = m.depth;
    j["output_qubit"] = m.output_qubit;
    j["decoder_layers"] = m.decoder_layers;
    j["params"] = nlohmann::json::array();
    for (std::size_t g = 0; g < m.num_groups(); ++g) {
        auto a = m.group_angles(g);
        j["params"].push_back(std::vector<double>(a.begin(), a.end()));
    }
    if (seed) {
        j["seed"] = *seed;
    }
    if (config) {
        j["training"] = to_json(*config);
    }
    return j;
}

inline QnnModel model_from_json(const nlohmann::json &j) {
    try {
        if (j.value("format", std::string{}) != "pqd-qnn") {
            throw Error(ErrorKind::io, "not a QNN model record");
        }
        CircuitOptions opts;
        opts.output_qubit = j.at("output_qubit").get<std::size_t>();
        opts.decoder_layers = j.at("decoder_layers").get<std::size_t>();
        QnnModel m = build_circuit(j.at("n").get<std::size_t>(), j.at("depth").get<std::size_t>(),
                                   parse_topology(j.at("topology").get<std::string>()), opts);
        const auto &p = j.at("params");
        if (p.size() != m.num_groups()) {
            throw Error(ErrorKind::io, "model record has the wrong number of gate groups");
        }
        for (std::size_t g = 0; g < p.size(); ++g) {
            if (p[g].size() != kGateParams) {
                throw Error(ErrorKind::io, "gate group must have 15 angles");
            }
            for (int k = 0; k < kGateParams; ++k) {
                m.params[static_cast<Eigen::Index>(g * kGateParams + k)] = p[g][k].get<double>();
            }
        }
        return m;
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorKind::io, std::string("malformed model record: ") + e.what());
    }
}

}  // namespace pqd
