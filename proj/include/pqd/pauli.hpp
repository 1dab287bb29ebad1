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
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "pqd/error.hpp"
#include "pqd/linalg.hpp"

namespace pqd {

/// Default ceiling on qubit count for anything that materializes 2^n amplitudes.
inline constexpr std::size_t kMaxDenseQubits = 12;

/// n-qubit Pauli operator in symplectic form, n <= 64.
///
/// Qubit 0 is the leftmost letter and the most significant bit of a
/// computational-basis index, so the x/z words double as index masks:
/// qubit j lives at bit (n - 1 - j). The phase is the exponent of i
/// multiplying the literal tensor product of I/X/Y/Z letters, so "Y" has
/// phase 0 and densifies to [[0,-i],[i,0]].
class PauliString {
   public:
    PauliString() = default;

    static PauliString identity(std::size_t n) {
        check_size(n);
        PauliString p;
        p.n_ = n;
        return p;
    }

    /// Builds from masks already in index order (qubit j at bit n-1-j).
    static PauliString from_masks(std::size_t n, std::uint64_t x, std::uint64_t z, unsigned phase = 0) {
        check_size(n);
        std::uint64_t m = full_mask(n);
        if ((x & ~m) != 0 || (z & ~m) != 0) {
            throw Error(ErrorKind::invalid_argument, "mask has bits beyond qubit count");
        }
        PauliString p;
        p.n_ = n;
        p.x_ = x;
        p.z_ = z;
        p.phase_ = static_cast<std::uint8_t>(phase & 3U);
        return p;
    }

    /// Parses letters I/X/Y/Z with an optional sign prefix (+, -, i, +i, -i).
    static PauliString from_string(std::string_view s) {
        unsigned phase = 0;
        if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
            phase = s.front() == '-' ? 2 : 0;
            s.remove_prefix(1);
        }
        if (!s.empty() && s.front() == 'i') {
            phase += 1;
            s.remove_prefix(1);
        }
        if (s.empty()) {
            throw Error(ErrorKind::invalid_argument, "empty Pauli string");
        }
        check_size(s.size());
        PauliString p;
        p.n_ = s.size();
        p.phase_ = static_cast<std::uint8_t>(phase & 3U);
        for (std::size_t j = 0; j < s.size(); ++j) {
            std::uint64_t bit = p.qubit_bit(j);
            switch (s[j]) {
                case 'I': break;
                case 'X': p.x_ |= bit; break;
                case 'Y': p.x_ |= bit; p.z_ |= bit; break;
                case 'Z': p.z_ |= bit; break;
                default:
                    throw Error(ErrorKind::invalid_argument,
                                std::string("invalid Pauli letter '") + s[j] + "' in \"" + std::string(s) + "\"");
            }
        }
        return p;
    }

    std::size_t num_qubits() const noexcept { return n_; }
    std::uint64_t x_mask() const noexcept { return x_; }
    std::uint64_t z_mask() const noexcept { return z_; }
    unsigned phase_exponent() const noexcept { return phase_; }

    cplx phase() const noexcept { return i_pow(phase_); }

    /// Nonzero entries are this coefficient times (-1)^popcount(col & z).
    cplx matrix_coefficient() const noexcept {
        return i_pow(phase_ + static_cast<unsigned>(std::popcount(x_ & z_)));
    }

    bool x(std::size_t q) const { return (x_ & qubit_bit(q)) != 0; }
    bool z(std::size_t q) const { return (z_ & qubit_bit(q)) != 0; }

    char letter(std::size_t q) const {
        static constexpr char kLetters[4] = {'I', 'X', 'Z', 'Y'};
        return kLetters[static_cast<int>(x(q)) | (static_cast<int>(z(q)) << 1)];
    }

    std::size_t weight() const noexcept { return static_cast<std::size_t>(std::popcount(x_ | z_)); }
    bool is_identity() const noexcept { return (x_ | z_) == 0; }
    bool is_hermitian() const noexcept { return (phase_ & 1U) == 0; }

    /// Letter string; a sign prefix appears only when the phase is not +1.
    std::string str() const {
        static constexpr const char *kPrefix[4] = {"", "i", "-", "-i"};
        std::string out = kPrefix[phase_];
        for (std::size_t j = 0; j < n_; ++j) {
            out.push_back(letter(j));
        }
        return out;
    }

    /// Same operator with phase reset to +1.
    PauliString unsigned_part() const {
        PauliString p = *this;
        p.phase_ = 0;
        return p;
    }

    PauliString with_phase(unsigned phase) const {
        PauliString p = *this;
        p.phase_ = static_cast<std::uint8_t>(phase & 3U);
        return p;
    }

    bool commutes(const PauliString &other) const {
        check_same_size(other);
        return ((std::popcount(x_ & other.z_) + std::popcount(z_ & other.x_)) & 1) == 0;
    }

    PauliString operator*(const PauliString &rhs) const {
        check_same_size(rhs);
        // Work in the X^x Z^z ordering, where each Y carries an extra factor of i.
        unsigned e = phase_ + static_cast<unsigned>(std::popcount(x_ & z_)) + rhs.phase_ +
                     static_cast<unsigned>(std::popcount(rhs.x_ & rhs.z_)) +
                     2U * static_cast<unsigned>(std::popcount(z_ & rhs.x_));
        PauliString out;
        out.n_ = n_;
        out.x_ = x_ ^ rhs.x_;
        out.z_ = z_ ^ rhs.z_;
        out.phase_ = static_cast<std::uint8_t>((e - static_cast<unsigned>(std::popcount(out.x_ & out.z_))) & 3U);
        return out;
    }

    bool operator==(const PauliString &other) const = default;

    /// Applies the operator to a statevector of dimension 2^n in O(2^n).
    Vector apply(const Vector &state) const {
        const std::size_t dim = std::size_t{1} << n_;
        if (static_cast<std::size_t>(state.size()) != dim) {
            throw Error(ErrorKind::length_mismatch, "state dimension does not match Pauli qubit count");
        }
        Vector out(state.size());
        const cplx c = matrix_coefficient();
        for (std::size_t i = 0; i < dim; ++i) {
            double sign = (std::popcount(i & z_) & 1) != 0 ? -1.0 : 1.0;
            out[static_cast<Eigen::Index>(i ^ x_)] = c * sign * state[static_cast<Eigen::Index>(i)];
        }
        return out;
    }

    /// Dense 2^n x 2^n matrix; qubit 0 is the most significant tensor factor.
    Matrix to_dense(std::size_t max_qubits = kMaxDenseQubits) const {
        if (n_ > max_qubits) {
            throw Error(ErrorKind::dimension_overflow,
                        "dense Pauli on " + std::to_string(n_) + " qubits exceeds limit " + std::to_string(max_qubits));
        }
        const std::size_t dim = std::size_t{1} << n_;
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        const cplx c = matrix_coefficient();
        for (std::size_t i = 0; i < dim; ++i) {
            double sign = (std::popcount(i & z_) & 1) != 0 ? -1.0 : 1.0;
            m(static_cast<Eigen::Index>(i ^ x_), static_cast<Eigen::Index>(i)) = c * sign;
        }
        return m;
    }

    std::uint64_t qubit_bit(std::size_t q) const {
        if (q >= n_) {
            throw Error(ErrorKind::invalid_argument, "qubit index out of range");
        }
        return std::uint64_t{1} << (n_ - 1 - q);
    }

   private:
    static cplx i_pow(unsigned k) {
        static const cplx kPowers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
        return kPowers[k & 3U];
    }

    static std::uint64_t full_mask(std::size_t n) { return n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1; }

    static void check_size(std::size_t n) {
        if (n == 0 || n > 64) {
            throw Error(ErrorKind::invalid_argument, "Pauli strings support 1..64 qubits");
        }
    }

    void check_same_size(const PauliString &other) const {
        if (n_ != other.n_) {
            throw Error(ErrorKind::length_mismatch, "Pauli strings act on different qubit counts");
        }
    }

    std::size_t n_ = 0;
    std::uint64_t x_ = 0;
    std::uint64_t z_ = 0;
    std::uint8_t phase_ = 0;
};

inline bool commutes(const PauliString &p, const PauliString &q) { return p.commutes(q); }

/// Visits every weight-w Pauli on n qubits in lexicographic letter order
/// (I < X < Y < Z), stopping early if the visitor returns false.
inline void for_each_pauli(std::size_t n, std::size_t w, const std::function<bool(const PauliString &)> &visit) {
    if (w > n) {
        return;
    }
    std::string letters(n, 'I');
    bool stop = false;
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t remaining) {
        if (stop) {
            return;
        }
        if (pos == n) {
            if (remaining == 0 && !visit(PauliString::from_string(letters))) {
                stop = true;
            }
            return;
        }
        if (n - pos > remaining) {
            letters[pos] = 'I';
            rec(pos + 1, remaining);
        }
        if (remaining > 0) {
            for (char c : {'X', 'Y', 'Z'}) {
                letters[pos] = c;
                rec(pos + 1, remaining - 1);
            }
            letters[pos] = 'I';
        }
    };
    rec(0, w);
}

/// All 3^w * C(n, w) Paulis of exact weight w, lexicographically ordered.
inline std::vector<PauliString> enumerate_paulis(std::size_t n, std::size_t w) {
    std::vector<PauliString> out;
    for_each_pauli(n, w, [&](const PauliString &p) {
        out.push_back(p);
        return true;
    });
    return out;
}

}  // namespace pqd
