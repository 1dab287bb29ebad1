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
#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pqd/error.hpp"
#include "pqd/linalg.hpp"
#include "pqd/pauli.hpp"

namespace pqd {

/// Bit a is set iff the error anticommutes with stabilizer a.
using Syndrome = std::uint64_t;

/// Minimum-weight correction per syndrome, indexed by the syndrome value.
struct CorrectionTable {
    std::vector<PauliString> entries;
    std::size_t w_max = 0;
    /// Syndromes reached by some error of weight <= w_max.
    std::size_t reachable = 0;
    /// Largest correction weight needed to cover every syndrome.
    std::size_t max_weight_used = 0;

    const PauliString &operator[](Syndrome s) const { return entries.at(static_cast<std::size_t>(s)); }
    std::size_t size() const noexcept { return entries.size(); }
};

struct StabilizerCode {
    std::string name;
    std::size_t n = 0;
    std::size_t distance = 0;
    std::vector<PauliString> stabilizers;
    PauliString logical_x;
    PauliString logical_y;
    PauliString logical_z;
    CorrectionTable correction_table;

    std::size_t correctable_weight() const { return distance == 0 ? 0 : (distance - 1) / 2; }
};

namespace detail {

/// Incremental GF(2) row reduction over 2n-bit symplectic vectors.
class SymplecticBasis {
   public:
    /// Returns true if (x, z) was independent of the rows so far (and adds it).
    bool insert(std::uint64_t x, std::uint64_t z) {
        Word v = reduce(pack(x, z));
        if (v == 0) {
            return false;
        }
        auto pos = std::find_if(rows_.begin(), rows_.end(), [&](Word r) { return top_bit(r) < top_bit(v); });
        rows_.insert(pos, v);
        return true;
    }

    bool contains(std::uint64_t x, std::uint64_t z) const { return reduce(pack(x, z)) == 0; }

    std::size_t rank() const noexcept { return rows_.size(); }

   private:
    using Word = unsigned __int128;

    static Word pack(std::uint64_t x, std::uint64_t z) { return (static_cast<Word>(x) << 64) | z; }

    static int top_bit(Word v) {
        auto hi = static_cast<std::uint64_t>(v >> 64);
        if (hi != 0) {
            return 127 - std::countl_zero(hi);
        }
        return 63 - std::countl_zero(static_cast<std::uint64_t>(v));
    }

    // Rows are kept with strictly decreasing leading bits.
    Word reduce(Word v) const {
        for (Word r : rows_) {
            if ((v >> top_bit(r)) & 1U) {
                v ^= r;
            }
        }
        return v;
    }

    std::vector<Word> rows_;
};

}  // namespace detail

inline void validate_generators(std::size_t n, const std::vector<PauliString> &stabilizers) {
    detail::SymplecticBasis basis;
    for (std::size_t a = 0; a < stabilizers.size(); ++a) {
        const auto &s = stabilizers[a];
        if (s.num_qubits() != n) {
            throw Error(ErrorKind::length_mismatch, "stabilizer " + s.str() + " has wrong qubit count");
        }
        if (!s.is_hermitian()) {
            throw Error(ErrorKind::invalid_argument, "stabilizer " + s.str() + " is not Hermitian");
        }
        for (std::size_t b = 0; b < a; ++b) {
            if (!s.commutes(stabilizers[b])) {
                throw Error(ErrorKind::invalid_argument,
                            "stabilizers " + stabilizers[b].str() + " and " + s.str() + " anticommute");
            }
        }
        if (!basis.insert(s.x_mask(), s.z_mask())) {
            throw Error(ErrorKind::invalid_argument, "stabilizer " + s.str() + " is not independent");
        }
    }
}

inline Syndrome syndrome(const std::vector<PauliString> &stabilizers, const PauliString &error) {
    Syndrome s = 0;
    for (std::size_t a = 0; a < stabilizers.size(); ++a) {
        if (!error.commutes(stabilizers[a])) {
            s |= Syndrome{1} << a;
        }
    }
    return s;
}

inline Syndrome syndrome(const StabilizerCode &code, const PauliString &error) {
    if (error.num_qubits() != code.n) {
        throw Error(ErrorKind::length_mismatch, "error acts on a different qubit count than the code");
    }
    return syndrome(code.stabilizers, error);
}

/// Syndrome as an (n-1)-entry bit list, entry a for stabilizer a.
inline std::vector<bool> syndrome_bits(const StabilizerCode &code, const PauliString &error) {
    Syndrome s = syndrome(code, error);
    std::vector<bool> bits(code.stabilizers.size());
    for (std::size_t a = 0; a < bits.size(); ++a) {
        bits[a] = ((s >> a) & 1U) != 0;
    }
    return bits;
}

/// True if p commutes with every generator but is not in the stabilizer group.
inline bool is_nontrivial_logical(const std::vector<PauliString> &stabilizers, const detail::SymplecticBasis &group,
                                  const PauliString &p) {
    return syndrome(stabilizers, p) == 0 && !group.contains(p.x_mask(), p.z_mask());
}

/// Minimum-weight logical pair (X_L, Z_L) by exhaustive normalizer search.
///
/// X_L is the first nontrivial normalizer element in (weight, lexicographic)
/// order; Z_L is the lightest element anticommuting with it, preferring a
/// Z-type one at that weight.
inline std::pair<PauliString, PauliString> find_logical_operators(std::size_t n,
                                                                  const std::vector<PauliString> &stabilizers) {
    validate_generators(n, stabilizers);
    if (stabilizers.size() + 1 != n) {
        throw Error(ErrorKind::invalid_argument, "generators do not define a [[n,1,d]] code");
    }
    detail::SymplecticBasis group;
    for (const auto &s : stabilizers) {
        group.insert(s.x_mask(), s.z_mask());
    }
    std::optional<PauliString> lx;
    std::optional<PauliString> lz;
    for (std::size_t w = 1; w <= n && !lz; ++w) {
        std::optional<PauliString> lz_candidate;
        for_each_pauli(n, w, [&](const PauliString &p) {
            if (!is_nontrivial_logical(stabilizers, group, p)) {
                return true;
            }
            if (!lx) {
                lx = p;
                return true;
            }
            if (!p.commutes(*lx) && !lz_candidate) {
                lz_candidate = p;
            }
            if (!p.commutes(*lx) && p.x_mask() == 0) {
                lz = p;
                return false;
            }
            return true;
        });
        if (!lz && lz_candidate) {
            lz = lz_candidate;
        }
    }
    if (!lx || !lz) {
        throw Error(ErrorKind::invalid_argument, "no anticommuting logical pair exists");
    }
    return {*lx, *lz};
}

/// Smallest weight of a nontrivial logical operator, searched up to `limit`.
inline std::optional<std::size_t> measured_distance(const StabilizerCode &code, std::size_t limit) {
    detail::SymplecticBasis group;
    for (const auto &s : code.stabilizers) {
        group.insert(s.x_mask(), s.z_mask());
    }
    for (std::size_t w = 1; w <= std::min(limit, code.n); ++w) {
        bool found = false;
        for_each_pauli(code.n, w, [&](const PauliString &p) {
            found = is_nontrivial_logical(code.stabilizers, group, p);
            return !found;
        });
        if (found) {
            return w;
        }
    }
    return std::nullopt;
}

/// Minimum-weight correction for each syndrome.
///
/// Errors up to `w_max` are enumerated first; if some syndromes are still
/// unreached the search continues weight by weight until all 2^(n-1)
/// syndromes hold a representative, so the recovery map is trace preserving.
inline CorrectionTable build_correction_table(const StabilizerCode &code, std::size_t w_max) {
    const std::size_t m = code.stabilizers.size();
    if (m > 24) {
        throw Error(ErrorKind::dimension_overflow, "correction table too large");
    }
    const std::size_t total = std::size_t{1} << m;
    CorrectionTable table;
    table.w_max = w_max;
    table.entries.assign(total, PauliString::identity(code.n));
    std::vector<bool> filled(total, false);
    std::size_t count = 0;
    for (std::size_t w = 0; w <= code.n && count < total; ++w) {
        for_each_pauli(code.n, w, [&](const PauliString &p) {
            Syndrome s = syndrome(code.stabilizers, p);
            if (!filled[s]) {
                filled[s] = true;
                table.entries[s] = p;
                ++count;
                table.max_weight_used = w;
            }
            return count < total;
        });
        if (w == w_max) {
            table.reachable = count;
        }
    }
    if (w_max > code.n) {
        table.reachable = count;
    }
    return table;
}

inline PauliString logical_y_from(const PauliString &lx, const PauliString &lz) {
    // Y_L = i X_L Z_L, Hermitian because X_L and Z_L anticommute.
    PauliString xz = lx * lz;
    return xz.with_phase(xz.phase_exponent() + 1);
}

/// Assembles a code from generator strings, deriving logicals and the table.
inline StabilizerCode make_code(std::string name, const std::vector<std::string> &generators, std::size_t distance) {
    if (generators.empty()) {
        throw Error(ErrorKind::invalid_argument, "use make_code(name, n, {}, d) for codes without generators");
    }
    StabilizerCode code;
    code.name = std::move(name);
    code.distance = distance;
    for (const auto &g : generators) {
        code.stabilizers.push_back(PauliString::from_string(g));
    }
    code.n = code.stabilizers.front().num_qubits();
    auto [lx, lz] = find_logical_operators(code.n, code.stabilizers);
    code.logical_x = lx;
    code.logical_z = lz;
    code.logical_y = logical_y_from(lx, lz);
    code.correction_table = build_correction_table(code, code.correctable_weight());
    return code;
}

/// The trivial one-qubit "code" with no generators.
inline StabilizerCode trivial_code() {
    StabilizerCode code;
    code.name = "trivial";
    code.n = 1;
    code.distance = 1;
    auto [lx, lz] = find_logical_operators(1, {});
    code.logical_x = lx;
    code.logical_z = lz;
    code.logical_y = logical_y_from(lx, lz);
    code.correction_table = build_correction_table(code, 0);
    return code;
}

struct BuiltinCodeSpec {
    std::string_view name;
    std::size_t distance;
    std::vector<std::string_view> generators;
};

inline const std::vector<BuiltinCodeSpec> &builtin_code_specs() {
    static const std::vector<BuiltinCodeSpec> specs = {
        {"five_qubit", 3, {"XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"}},
        {"steane", 3, {"IIIXXXX", "IXXIIXX", "XIXIXIX", "IIIZZZZ", "IZZIIZZ", "ZIZIZIZ"}},
        {"shor",
         3,
         {"ZZIIIIIII", "IZZIIIIII", "IIIZZIIII", "IIIIZZIII", "IIIIIIZZI", "IIIIIIIZZ", "XXXXXXIII", "IIIXXXXXX"}},
        {"eleven_qubit",
         5,
         {"XZIZIXIZZII", "IYIZZYIIZZI", "IZXIZXIIIZZ", "IZZYIYZIIZI", "IIZZXXZZIZZ", "IIZZIIYZZIY", "IZIZZZZYIZY",
          "IIIZIZIZXZX", "IZIZIIZIZXX", "ZZZZZZIIIII"}},
    };
    return specs;
}

inline StabilizerCode builtin_code(std::string_view name) {
    for (const auto &spec : builtin_code_specs()) {
        if (spec.name == name) {
            std::vector<std::string> gens(spec.generators.begin(), spec.generators.end());
            return make_code(std::string(spec.name), gens, spec.distance);
        }
    }
    throw Error(ErrorKind::invalid_argument, "unknown code \"" + std::string(name) + "\"");
}

/// Text block: name, distance, then one "S_a = ..." line per generator.
inline std::string export_code(const StabilizerCode &code) {
    std::ostringstream out;
    out << "name = " << code.name << "\n";
    out << "distance = " << code.distance << "\n";
    for (std::size_t a = 0; a < code.stabilizers.size(); ++a) {
        out << "S_" << (a + 1) << " = " << code.stabilizers[a].str() << "\n";
    }
    return out.str();
}

inline StabilizerCode import_code(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::string name;
    std::optional<std::size_t> distance;
    std::vector<std::string> gens;
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::config, "malformed code line: " + line);
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "name") {
            name = value;
        } else if (key == "distance") {
            distance = std::stoul(value);
        } else if (key.rfind("S_", 0) == 0) {
            std::size_t idx = std::stoul(key.substr(2));
            if (idx != gens.size() + 1) {
                throw Error(ErrorKind::config, "stabilizers must be listed in order S_1, S_2, ...");
            }
            gens.push_back(value);
        } else {
            throw Error(ErrorKind::config, "unknown key in code block: " + key);
        }
    }
    if (name.empty() || !distance || gens.empty()) {
        throw Error(ErrorKind::config, "code block needs name, distance and at least one stabilizer");
    }
    return make_code(name, gens, *distance);
}

/// Dense projector onto the codespace plus the unperturbed codewords.
struct Codespace {
    Matrix projector;
    Vector codeword0;  // Z_L = +1
    Vector codeword1;  // X_L |codeword0>
};

/// Applies prod_a (1 + S_a)/2 to v.
inline Vector project_to_codespace(const std::vector<PauliString> &stabilizers, Vector v) {
    for (const auto &s : stabilizers) {
        v = 0.5 * (v + s.apply(v));
    }
    return v;
}

/// Unperturbed codewords: |0_L> is the +1 eigenvector of Z_L in the codespace
/// with its largest amplitude real positive, and |1_L> = X_L |0_L>.
inline std::pair<Vector, Vector> unperturbed_codewords(const StabilizerCode &code,
                                                       std::size_t max_qubits = kMaxDenseQubits) {
    if (code.n > max_qubits) {
        throw Error(ErrorKind::dimension_overflow, "codewords need 2^n amplitudes; n exceeds limit");
    }
    const Eigen::Index dim = Eigen::Index{1} << code.n;
    std::vector<PauliString> projectors = code.stabilizers;
    projectors.push_back(code.logical_z);
    for (Eigen::Index j = 0; j < dim; ++j) {
        Vector v = Vector::Zero(dim);
        v[j] = 1.0;
        v = project_to_codespace(projectors, v);
        double norm = v.norm();
        if (norm > 1e-6) {
            v /= norm;
            fix_global_phase(v);
            Vector w = code.logical_x.apply(v);
            return {v, w};
        }
    }
    throw Error(ErrorKind::numerical, "codespace is empty");
}

inline Codespace codespace(const StabilizerCode &code, std::size_t max_qubits = kMaxDenseQubits) {
    auto [c0, c1] = unperturbed_codewords(code, max_qubits);
    Codespace cs;
    cs.projector = c0 * c0.adjoint() + c1 * c1.adjoint();
    cs.codeword0 = std::move(c0);
    cs.codeword1 = std::move(c1);
    return cs;
}

/// Identity plus every Pauli of weight 1..p, in (weight, lexicographic) order.
inline std::vector<PauliString> errors_up_to_weight(std::size_t n, std::size_t p) {
    std::vector<PauliString> out;
    for (std::size_t w = 0; w <= std::min(p, n); ++w) {
        auto batch = enumerate_paulis(n, w);
        out.insert(out.end(), batch.begin(), batch.end());
    }
    return out;
}

struct KlReport {
    /// max over (alpha, beta) of |<w0| P_a P_b |w1>|.
    double max_offdiagonal = 0.0;
    /// max over (alpha, beta) of |<w0|P_a P_b|w0> - <w1|P_a P_b|w1>|.
    double max_diagonal_mismatch = 0.0;
    /// epsilon_{ab} = <w0| P_a P_b |w0>.
    Matrix epsilon;
    std::vector<PauliString> errors;
};

/// Knill-Laflamme overlaps of an arbitrary codeword pair under an error set.
inline KlReport kl_report(const Vector &w0, const Vector &w1, const std::vector<PauliString> &errors) {
    const Eigen::Index dim = w0.size();
    const Eigen::Index m = static_cast<Eigen::Index>(errors.size());
    Matrix e0(dim, m);
    Matrix e1(dim, m);
    for (Eigen::Index b = 0; b < m; ++b) {
        e0.col(b) = errors[static_cast<std::size_t>(b)].apply(w0);
        e1.col(b) = errors[static_cast<std::size_t>(b)].apply(w1);
    }
    KlReport report;
    report.errors = errors;
    report.epsilon = e0.adjoint() * e0;
    Matrix off = e0.adjoint() * e1;
    Matrix diag1 = e1.adjoint() * e1;
    report.max_offdiagonal = m == 0 ? 0.0 : off.cwiseAbs().maxCoeff();
    report.max_diagonal_mismatch = m == 0 ? 0.0 : (diag1 - report.epsilon).cwiseAbs().maxCoeff();
    return report;
}

/// KL check on the unperturbed codewords for all errors of weight <= p.
inline KlReport kl_check(const StabilizerCode &code, std::size_t p) {
    if (2 * p + 1 > code.distance) {
        throw Error(ErrorKind::invalid_argument, "KL check requires 2p+1 <= d");
    }
    auto [c0, c1] = unperturbed_codewords(code);
    return kl_report(c0, c1, errors_up_to_weight(code.n, p));
}

}  // namespace pqd
