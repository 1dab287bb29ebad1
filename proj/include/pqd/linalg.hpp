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
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "pqd/error.hpp"

namespace pqd {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;

/// Largest |A - A^dagger| entry.
inline double hermiticity_defect(const Matrix &a) {
    if (a.rows() != a.cols()) {
        throw Error(ErrorKind::length_mismatch, "matrix is not square");
    }
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

/// Rotates v so that its largest-magnitude amplitude is real and positive.
/// Ties resolve to the lowest index.
inline void fix_global_phase(Eigen::Ref<Vector> v) {
    Eigen::Index best = 0;
    double best_mag = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double m = std::abs(v[i]);
        // The slack keeps the choice stable against roundoff between equal-magnitude entries.
        if (m > best_mag * (1.0 + 1e-9) + 1e-14) {
            best_mag = m;
            best = i;
        }
    }
    if (best_mag > 0.0) {
        v *= std::conj(v[best]) / best_mag;
    }
}

/// Upper bound on the spectral norm of a Hermitian matrix (max absolute row sum).
inline double norm_bound(const Matrix &a) { return a.cwiseAbs().rowwise().sum().maxCoeff(); }

struct Eigenpairs {
    Eigen::VectorXd values;  // ascending
    Matrix vectors;          // columns
};

/// Lowest `count` eigenpairs of a Hermitian matrix via LAPACK zheevr.
inline Eigenpairs hermitian_lowest(const Matrix &h, std::size_t count) {
    const lapack_int n = static_cast<lapack_int>(h.rows());
    if (count == 0 || static_cast<lapack_int>(count) > n) {
        throw Error(ErrorKind::invalid_argument, "eigenpair count must be in [1, dimension]");
    }
    Matrix a = h;
    Eigen::VectorXd w(n);
    Matrix z(n, static_cast<Eigen::Index>(count));
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
    lapack_int found = 0;
    lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n,
                                     reinterpret_cast<lapack_complex_double *>(a.data()), n, 0.0, 0.0, 1,
                                     static_cast<lapack_int>(count), LAPACKE_dlamch('S'), &found, w.data(),
                                     reinterpret_cast<lapack_complex_double *>(z.data()), n, isuppz.data());
    if (info != 0 || found != static_cast<lapack_int>(count)) {
        throw Error(ErrorKind::numerical, "zheevr failed with info=" + std::to_string(info));
    }
    return {w.head(static_cast<Eigen::Index>(count)), z};
}

/// Full eigendecomposition of a Hermitian matrix via LAPACK zheevd.
inline Eigenpairs hermitian_full(const Matrix &h) {
    const lapack_int n = static_cast<lapack_int>(h.rows());
    Matrix a = h;
    Eigen::VectorXd w(n);
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                     reinterpret_cast<lapack_complex_double *>(a.data()), n, w.data());
    if (info != 0) {
        throw Error(ErrorKind::numerical, "zheevd failed with info=" + std::to_string(info));
    }
    return {w, a};
}

/// Neumaier-compensated accumulator.
class CompensatedSum {
   public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

   private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace pqd
