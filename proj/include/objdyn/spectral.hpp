#pragma once

// Eigenvalue analysis of drift matrices: spectrum, regime label,
// convergence rate rho = -Re(lambda_max) and the continuous/discrete
// stability bridge lambda_discrete = 1 + lambda * dt.

#include "objdyn/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace objdyn::spectral {

using Complex = std::complex<double>;

/// Default "near zero" tolerance on eigenvalue real/imaginary parts.
inline constexpr double kDefaultZeroTol = 1e-2;

/// Descending real part, then descending imaginary part.
inline void sort_spectrum(std::vector<Complex>& values) {
    std::sort(values.begin(), values.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
}

inline std::vector<Complex> eigen_spectrum(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw Error(ErrorKind::NonSquare,
                    "matrix is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
    if (!a.allFinite()) throw Error(ErrorKind::NonFinite, "matrix has non-finite entries");

    Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::NonFinite, "eigenvalue iteration did not converge");
    const auto& ev = solver.eigenvalues();
    std::vector<Complex> values(ev.data(), ev.data() + ev.size());
    sort_spectrum(values);
    return values;
}

/// Regime precedence: Unstable, then Boundary, then Oscillatory, else Exponential.
inline Regime regime_of(std::span<const Complex> spectrum, double zero_tol) {
    bool positive = false;
    bool near_zero = false;
    bool complex_part = false;
    for (const auto& l : spectrum) {
        positive = positive || l.real() > zero_tol;
        near_zero = near_zero || std::abs(l.real()) <= zero_tol;
        complex_part = complex_part || std::abs(l.imag()) > zero_tol;
    }
    if (positive) return Regime::Unstable;
    if (near_zero) return Regime::Boundary;
    if (complex_part) return Regime::Oscillatory;
    return Regime::Exponential;
}

inline SpectrumReport classify_regime(std::vector<Complex> spectrum, double dt = 1.0,
                                      double zero_tol = kDefaultZeroTol) {
    if (spectrum.empty()) throw Error(ErrorKind::InvalidArgument, "empty spectrum");
    if (!(zero_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "zero_tol must be > 0");
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be > 0");
    sort_spectrum(spectrum);

    SpectrumReport report;
    report.dt = dt;
    report.regime = regime_of(spectrum, zero_tol);
    report.convergence_rate = -spectrum.front().real();
    report.discrete_stable = true;
    report.discrete_eigenvalues.reserve(spectrum.size());
    for (const auto& l : spectrum) {
        const Complex d = 1.0 + l * dt;
        report.discrete_eigenvalues.push_back(d);
        report.discrete_stable = report.discrete_stable && std::abs(d) < 1.0;
    }
    report.eigenvalues = std::move(spectrum);
    return report;
}

inline SpectrumReport analyze_matrix(const Matrix& a, double dt = 1.0, double zero_tol = kDefaultZeroTol) {
    return classify_regime(eigen_spectrum(a), dt, zero_tol);
}

struct StabilityBridge {
    Complex discrete;
    bool continuous_stable;  // Re(lambda) < 0
    bool discrete_stable;    // |1 + lambda dt| < 1
};

/// The two criteria can disagree, e.g. lambda = -3, dt = 1 gives |lambda_d| = 2.
inline StabilityBridge stability_bridge_check(Complex lambda, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be > 0");
    const Complex d = 1.0 + lambda * dt;
    return {d, lambda.real() < 0.0, std::abs(d) < 1.0};
}

}  // namespace objdyn::spectral
