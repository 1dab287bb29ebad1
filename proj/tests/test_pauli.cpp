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

#include <gtest/gtest.h>

#include <set>

#include "pqd/pauli.hpp"
#include "pqd/random.hpp"

namespace {

using namespace pqd;

// Literal tensor product of letters, qubit 0 leftmost.
Matrix kron_letters(const std::string &s) {
    const cplx i(0.0, 1.0);
    Matrix out = Matrix::Identity(1, 1);
    for (char c : s) {
        Matrix2 m;
        switch (c) {
            case 'I': m << 1, 0, 0, 1; break;
            case 'X': m << 0, 1, 1, 0; break;
            case 'Y': m << 0, -i, i, 0; break;
            default: m << 1, 0, 0, -1; break;
        }
        Matrix next(out.rows() * 2, out.cols() * 2);
        for (Eigen::Index r = 0; r < out.rows(); ++r)
            for (Eigen::Index c2 = 0; c2 < out.cols(); ++c2) next.block(2 * r, 2 * c2, 2, 2) = out(r, c2) * m;
        out = next;
    }
    return out;
}

std::string random_letters(Rng &rng, std::size_t n) {
    std::string s;
    for (std::size_t q = 0; q < n; ++q) s += "IXYZ"[rng.below(4)];
    return s;
}

TEST(Pauli, ParsesFiveQubitGenerator) {
    PauliString p = PauliString::from_string("XZZXI");
    EXPECT_EQ(p.num_qubits(), 5u);
    EXPECT_EQ(p.x_mask(), 0b10010u);
    EXPECT_EQ(p.z_mask(), 0b01100u);
    EXPECT_EQ(p.weight(), 4u);
    EXPECT_EQ(p.phase_exponent(), 0);
    EXPECT_EQ(p.str(), "XZZXI");
}

TEST(Pauli, IdentityHasWeightZero) {
    PauliString p = PauliString::from_string("IIIII");
    EXPECT_TRUE(p.is_identity());
    EXPECT_EQ(p.weight(), 0u);
    EXPECT_EQ(p, PauliString::identity(5));
}

TEST(Pauli, SingleYDense) {
    Matrix y = PauliString::from_string("Y").to_dense();
    Matrix2 expected;
    expected << 0, cplx(0, -1), cplx(0, 1), 0;
    EXPECT_LT((y - expected).norm(), 1e-15);
}

TEST(Pauli, RejectsBadInput) {
    EXPECT_THROW(PauliString::from_string(""), Error);
    EXPECT_THROW(PauliString::from_string("XQZ"), Error);
    EXPECT_THROW(PauliString::from_string("xz"), Error);
}

TEST(Pauli, RoundTripsThroughString) {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        std::string s = random_letters(rng, 1 + rng.below(9));
        EXPECT_EQ(PauliString::from_string(s).str(), s);
    }
    EXPECT_EQ(PauliString::from_string("-iXY").str(), "-iXY");
}

TEST(Pauli, CommutationExamples) {
    EXPECT_FALSE(commutes(PauliString::from_string("X"), PauliString::from_string("Z")));
    EXPECT_TRUE(commutes(PauliString::from_string("XZZXI"), PauliString::from_string("IXZZX")));
    EXPECT_THROW(commutes(PauliString::from_string("X"), PauliString::from_string("XX")), Error);
}

TEST(Pauli, MultiplyExamples) {
    PauliString xz = PauliString::from_string("X") * PauliString::from_string("Z");
    EXPECT_EQ(xz.letter(0), 'Y');
    EXPECT_EQ(xz.phase_exponent(), 3);  // -i
    PauliString p = PauliString::from_string("XYZ");
    EXPECT_EQ(p * PauliString::identity(3), p);
    PauliString pp = p * p;
    EXPECT_TRUE(pp.is_identity());
    EXPECT_EQ(pp.phase_exponent(), 0);
    EXPECT_THROW(p * PauliString::identity(2), Error);
}

TEST(Pauli, DenseExamples) {
    Matrix2 x;
    x << 0, 1, 1, 0;
    EXPECT_LT((PauliString::from_string("X").to_dense() - x).norm(), 1e-15);
    Matrix zz = PauliString::from_string("ZZ").to_dense();
    Eigen::Vector4cd diag(1, -1, -1, 1);
    EXPECT_LT((zz - Matrix(diag.asDiagonal())).norm(), 1e-15);
    Matrix s = PauliString::from_string("XZZXI").to_dense();
    EXPECT_LT((s * s - Matrix::Identity(32, 32)).norm(), 1e-13);
    EXPECT_THROW(PauliString::identity(13).to_dense(), Error);
}

TEST(Pauli, DenseMatchesKroneckerOracle) {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        std::string s = random_letters(rng, 1 + rng.below(4));
        EXPECT_LT((PauliString::from_string(s).to_dense() - kron_letters(s)).norm(), 1e-14) << s;
    }
}

TEST(Pauli, CommutesMatchesDenseCommutator) {
    Rng rng(7);
    for (int t = 0; t < 300; ++t) {
        std::size_t n = 1 + rng.below(3);
        std::string a = random_letters(rng, n);
        std::string b = random_letters(rng, n);
        Matrix ma = kron_letters(a);
        Matrix mb = kron_letters(b);
        bool dense = (ma * mb - mb * ma).norm() < 1e-12;
        EXPECT_EQ(commutes(PauliString::from_string(a), PauliString::from_string(b)), dense) << a << " " << b;
    }
}

TEST(Pauli, ProductMatchesDenseProduct) {
    Rng rng(11);
    const char *prefixes[] = {"", "-", "i", "-i"};
    for (int t = 0; t < 300; ++t) {
        std::size_t n = 1 + rng.below(3);
        std::string a = prefixes[rng.below(4)] + random_letters(rng, n);
        std::string b = prefixes[rng.below(4)] + random_letters(rng, n);
        PauliString pa = PauliString::from_string(a);
        PauliString pb = PauliString::from_string(b);
        Matrix prod = (pa * pb).to_dense();
        EXPECT_LT((prod - pa.to_dense() * pb.to_dense()).norm(), 1e-14) << a << " * " << b;
        EXPECT_LE((pa * pb).weight(), pa.weight() + pb.weight());
    }
}

TEST(Pauli, MultiplyIsAssociative) {
    Rng rng(13);
    for (int t = 0; t < 200; ++t) {
        std::size_t n = 1 + rng.below(6);
        PauliString a = PauliString::from_string(random_letters(rng, n));
        PauliString b = PauliString::from_string(random_letters(rng, n));
        PauliString c = PauliString::from_string(random_letters(rng, n));
        EXPECT_EQ((a * b) * c, a * (b * c));
    }
}

TEST(Pauli, ApplyMatchesDense) {
    Rng rng(17);
    for (int t = 0; t < 50; ++t) {
        std::size_t n = 1 + rng.below(4);
        PauliString p = PauliString::from_string(random_letters(rng, n));
        Vector v(Eigen::Index{1} << n);
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = cplx(rng.normal(), rng.normal());
        EXPECT_LT((p.apply(v) - p.to_dense() * v).norm(), 1e-13);
    }
}

TEST(Pauli, DenseIsUnitaryAndHermitianForRealPhase) {
    for (const char *s : {"XYZ", "-YYI", "iXZ"}) {
        PauliString p = PauliString::from_string(s);
        Matrix m = p.to_dense();
        EXPECT_LT((m.adjoint() * m - Matrix::Identity(m.rows(), m.cols())).norm(), 1e-14);
        EXPECT_EQ(p.is_hermitian(), (m - m.adjoint()).norm() < 1e-14) << s;
    }
}

TEST(Pauli, EnumerationCounts) {
    EXPECT_EQ(enumerate_paulis(5, 1).size(), 15u);
    EXPECT_EQ(enumerate_paulis(11, 2).size(), 495u);
    auto zero = enumerate_paulis(4, 0);
    ASSERT_EQ(zero.size(), 1u);
    EXPECT_TRUE(zero[0].is_identity());
}

TEST(Pauli, EnumerationIsCompleteOrderedAndDistinct) {
    auto binom = [](std::size_t n, std::size_t k) {
        std::size_t r = 1;
        for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    for (std::size_t n = 1; n <= 5; ++n) {
        for (std::size_t w = 0; w <= n; ++w) {
            auto all = enumerate_paulis(n, w);
            std::size_t expected = binom(n, w);
            for (std::size_t i = 0; i < w; ++i) expected *= 3;
            EXPECT_EQ(all.size(), expected);
            std::set<std::string> seen;
            std::string prev;
            for (const auto &p : all) {
                EXPECT_EQ(p.weight(), w);
                std::string s = p.str();
                // I < X < Y < Z matches ASCII order.
                EXPECT_LT(prev, s);
                prev = s;
                seen.insert(s);
            }
            EXPECT_EQ(seen.size(), all.size());
        }
    }
}

}  // namespace
