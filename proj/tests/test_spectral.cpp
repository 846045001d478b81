#include "objdyn/simulator.hpp"
#include "objdyn/spectral.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace objdyn;
using spectral::Complex;

TEST(EigenSpectrum, DiagonalPresets) {
    const auto ai = spectral::eigen_spectrum(sim::preset("AI").drift_matrix);
    for (const auto& l : ai) EXPECT_EQ(l, Complex(0.08, 0.0));

    const auto ff = spectral::eigen_spectrum(sim::preset("FF").drift_matrix);
    ASSERT_EQ(ff.size(), 3u);
    EXPECT_NEAR(ff[0].real(), 0.9, 1e-15);
    EXPECT_NEAR(ff[1].real(), -0.82, 1e-15);
    EXPECT_NEAR(ff[2].real(), -0.88, 1e-15);
}

TEST(EigenSpectrum, CompanionMatrixRoots) {
    const Matrix a = (Matrix(2, 2) << 0, 1, -1, -1).finished();
    const auto l = spectral::eigen_spectrum(a);
    ASSERT_EQ(l.size(), 2u);
    EXPECT_NEAR(l[0].real(), -0.5, 1e-12);
    EXPECT_NEAR(l[0].imag(), std::sqrt(3.0) / 2.0, 1e-12);
    EXPECT_NEAR(l[1].imag(), -std::sqrt(3.0) / 2.0, 1e-12);
    const auto report = spectral::classify_regime(l);
    EXPECT_EQ(report.regime, Regime::Oscillatory);
    EXPECT_NEAR(report.convergence_rate, 0.5, 1e-12);
}

TEST(EigenSpectrum, Errors) {
    EXPECT_THROW(spectral::eigen_spectrum(Matrix::Zero(2, 3)), Error);
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    try {
        spectral::eigen_spectrum(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
    }
}

TEST(ClassifyRegime, Examples) {
    const auto unstable = spectral::classify_regime({Complex(0.1, 0), Complex(-1, 0)});
    EXPECT_EQ(unstable.regime, Regime::Unstable);
    EXPECT_NEAR(unstable.convergence_rate, -0.1, 1e-15);

    const auto boundary = spectral::classify_regime({Complex(0.005, 0), Complex(-1, 0)});
    EXPECT_EQ(boundary.regime, Regime::Boundary);

    const auto osc = spectral::classify_regime({Complex(-0.5, 0.8), Complex(-0.5, -0.8)});
    EXPECT_EQ(osc.regime, Regime::Oscillatory);
    EXPECT_NEAR(std::abs(osc.discrete_eigenvalues[0]), std::sqrt(0.25 + 0.64), 1e-12);
    EXPECT_NEAR(std::abs(osc.discrete_eigenvalues[0]), 0.943, 5e-4);
    EXPECT_TRUE(osc.discrete_stable);

    const auto expo = spectral::classify_regime({Complex(-0.33, 0), Complex(-1.08, 0)});
    EXPECT_EQ(expo.regime, Regime::Exponential);
    EXPECT_NEAR(expo.convergence_rate, 0.33, 1e-12);
    EXPECT_NEAR(std::abs(expo.discrete_eigenvalues[0]), 0.67, 1e-12);
}

TEST(ClassifyRegime, UnstableTakesPrecedence) {
    const auto r = spectral::classify_regime({Complex(0.2, 0.5), Complex(0.2, -0.5), Complex(0.0, 0.0)});
    EXPECT_EQ(r.regime, Regime::Unstable);
}

TEST(ClassifyRegime, ScaleConsistency) {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> re(-2.0, -0.1);
    std::uniform_real_distribution<double> im(0.05, 2.0);
    std::uniform_real_distribution<double> scale(0.2, 5.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<Complex> l{Complex(re(gen), 0.0)};
        if (rep % 2 == 0) {
            const Complex c(re(gen), im(gen));
            l.push_back(c);
            l.push_back(std::conj(c));
        } else {
            l.push_back(Complex(re(gen), 0.0));
        }
        const auto base = spectral::classify_regime(l);
        if (base.regime != Regime::Exponential && base.regime != Regime::Oscillatory) continue;
        const double c = scale(gen);
        std::vector<Complex> scaled;
        for (const auto& x : l) scaled.push_back(c * x);
        const auto r = spectral::classify_regime(scaled);
        if (r.regime != Regime::Exponential && r.regime != Regime::Oscillatory) continue;
        EXPECT_EQ(r.regime, base.regime) << rep;
    }
}

TEST(StabilityBridge, Examples) {
    const auto b = spectral::stability_bridge_check(Complex(-3.0, 0.0), 1.0);
    EXPECT_EQ(b.discrete, Complex(-2.0, 0.0));
    EXPECT_TRUE(b.continuous_stable);
    EXPECT_FALSE(b.discrete_stable);
    const auto s = spectral::stability_bridge_check(Complex(-0.5, 0.8), 1.0);
    EXPECT_TRUE(s.continuous_stable);
    EXPECT_TRUE(s.discrete_stable);
    EXPECT_THROW(spectral::stability_bridge_check(Complex(-1.0, 0.0), 0.0), Error);
}

TEST(EigenSpectrum, MatchesCharacteristicPolynomialRoots) {
    std::mt19937_64 gen(1234);
    for (Eigen::Index n : {1, 2, 3}) {
        for (int rep = 0; rep < 300; ++rep) {
            const Matrix a = oracle::random_matrix(gen, n);
            const auto got = spectral::eigen_spectrum(a);
            const auto want = oracle::characteristic_roots(a);
            EXPECT_LT(oracle::multiset_distance(got, want), 1e-9) << "n=" << n << " rep=" << rep << "\n" << a;
        }
    }
}

TEST(EigenSpectrum, TraceAndDeterminant) {
    std::mt19937_64 gen(99);
    for (int rep = 0; rep < 500; ++rep) {
        const Matrix a = oracle::random_matrix(gen, 3, -2.0, 2.0);
        const auto l = spectral::eigen_spectrum(a);
        Complex sum = 0.0;
        Complex prod = 1.0;
        for (const auto& x : l) {
            sum += x;
            prod *= x;
        }
        const double tr = a.trace();
        const double det = a.determinant();
        EXPECT_LE(std::abs(sum - tr), 1e-9 * std::max(1.0, std::abs(tr))) << rep;
        EXPECT_LE(std::abs(prod - det), 1e-9 * std::max(1.0, std::abs(det))) << rep;
    }
}

TEST(ClassifyRegime, DiscreteEigenvaluesAreExactlyShifted) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> dtd(0.01, 2.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double dt = dtd(gen);
        const auto r = spectral::analyze_matrix(oracle::random_matrix(gen, 3), dt);
        ASSERT_EQ(r.discrete_eigenvalues.size(), r.eigenvalues.size());
        for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
            EXPECT_EQ(r.discrete_eigenvalues[i], 1.0 + r.eigenvalues[i] * dt);
        }
        EXPECT_EQ(r.dt, dt);
    }
}
