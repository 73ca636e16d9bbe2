#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "tbir/bspline.hpp"
#include "tbir/grid.hpp"
#include "test_helpers.hpp"

using namespace tbir;

namespace {

// Dense oracle for the 2D coefficient system: samples = (B ⊗ B) coeffs with
// B tridiagonal [1/6 4/6 1/6] and zero extension beyond the lattice.
std::vector<double> dense_fit_2d(const ScalarField& f) {
    const int m = f.grid.m;
    const std::int64_t N = f.grid.size();
    auto B = [&](int i, int k) -> double {
        if (i == k) return 4.0 / 6.0;
        if (std::abs(i - k) == 1) return 1.0 / 6.0;
        return 0.0;
    };
    std::vector<double> A(N * N, 0.0);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
            for (int l = 0; l < m; ++l)
                for (int k = 0; k < m; ++k)
                    A[(i + m * j) * N + (k + m * l)] = B(i, k) * B(j, l);
    return testutil::dense_solve(std::move(A), f.samples);
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST_CASE("fitting the zero field gives zero coefficients") {
    ScalarField f = bspline_fit(constant_field(make_grid(2, 8), 0.0));
    REQUIRE(f.has_coeffs());
    for (double c : f.coeffs) REQUIRE(c == 0.0);
}

TEST_CASE("random 8x8 fit matches a dense LU oracle") {
    ScalarField f = testutil::random_field(make_grid(2, 8), 23, -1.0, 1.0);
    std::vector<double> oracle = dense_fit_2d(f);
    ScalarField fit = bspline_fit(f);
    for (std::int64_t i = 0; i < std::ssize(oracle); ++i)
        REQUIRE(fit.coeffs[i] == Catch::Approx(oracle[i]).margin(1e-10));

    auto vals = bspline_values(fit, cell_centers(f.grid));
    double tol = 1e-10 * (1.0 + max_abs(f.samples));
    for (std::int64_t i = 0; i < std::ssize(vals); ++i)
        REQUIRE(std::abs(vals[i] - f.samples[i]) <= tol);
}

TEST_CASE("interpolant reproduces samples at cell centres") {
    for (auto [n, m] : {std::pair{2, 16}, std::pair{3, 8}}) {
        ScalarField f = bspline_fit(testutil::random_field(make_grid(n, m), 100 + m, -2.0, 2.0));
        auto vals = bspline_values(f, cell_centers(f.grid));
        double tol = 1e-10 * (1.0 + max_abs(f.samples));
        for (std::int64_t i = 0; i < std::ssize(vals); ++i)
            REQUIRE(std::abs(vals[i] - f.samples[i]) <= tol);
    }
}

TEST_CASE("constant field interpolates to the constant deep inside the domain") {
    // Zero extension makes the interpolant droop in a boundary band; the
    // deviation decays geometrically inward, so probe well inside.
    ScalarField f = bspline_fit(constant_field(make_grid(2, 64), 3.25));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(20.0 / 64, 1.0 - 20.0 / 64);
    std::vector<double> pts;
    for (int i = 0; i < 200; ++i) {
        pts.push_back(dist(rng));
        pts.push_back(dist(rng));
    }
    std::vector<double> vals(200), grads(400);
    bspline_eval(f, pts, vals, grads);
    for (double v : vals) REQUIRE(v == Catch::Approx(3.25).margin(1e-9));
    for (double g : grads) REQUIRE(std::abs(g) < 1e-7);
}

TEST_CASE("linear ramp has unit gradient deep inside the domain") {
    GridSpec g = make_grid(2, 64);
    auto centers = cell_centers(g);
    std::vector<double> samples(g.size());
    for (std::int64_t p = 0; p < g.size(); ++p) samples[p] = centers[2 * p];
    ScalarField f = bspline_fit(make_field(g, samples));

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dist(20.0 / 64, 1.0 - 20.0 / 64);
    std::vector<double> pts;
    for (int i = 0; i < 100; ++i) {
        pts.push_back(dist(rng));
        pts.push_back(dist(rng));
    }
    std::vector<double> vals(100), grads(200);
    bspline_eval(f, pts, vals, grads);
    for (int i = 0; i < 100; ++i) {
        REQUIRE(vals[i] == Catch::Approx(pts[2 * i]).margin(1e-8));
        REQUIRE(grads[2 * i] == Catch::Approx(1.0).margin(1e-8));
        REQUIRE(grads[2 * i + 1] == Catch::Approx(0.0).margin(1e-8));
    }
}

TEST_CASE("analytic gradient matches central differences of the interpolant") {
    ScalarField f = bspline_fit(testutil::smooth_field(make_grid(2, 32), 77));
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(0.1, 0.9);
    const double step = 1e-5;
    for (int trial = 0; trial < 100; ++trial) {
        double x = dist(rng), y = dist(rng);
        std::vector<double> pt{x, y};
        std::vector<double> val(1), grad(2);
        bspline_eval(f, pt, val, grad);
        for (int a = 0; a < 2; ++a) {
            std::vector<double> plus{x, y}, minus{x, y};
            plus[a] += step;
            minus[a] -= step;
            double fd =
                (bspline_values(f, plus)[0] - bspline_values(f, minus)[0]) / (2 * step);
            double denom = std::max(1.0, std::abs(fd));
            REQUIRE(std::abs(grad[a] - fd) / denom < 1e-4);
        }
    }
}

TEST_CASE("points outside the domain evaluate to zero") {
    ScalarField f = bspline_fit(testutil::random_field(make_grid(2, 8), 3));
    std::vector<double> pts{-0.5, 0.5, 1.5, 0.5, 0.5, -2.0, 0.5, 3.0};
    std::vector<double> vals(4), grads(8);
    bspline_eval(f, pts, vals, grads);
    for (double v : vals) REQUIRE(v == 0.0);
    for (double g : grads) REQUIRE(g == 0.0);
}

TEST_CASE("3d fit and evaluation reproduce samples") {
    ScalarField f = bspline_fit(testutil::random_field(make_grid(3, 8), 55, 0.0, 4.0));
    auto vals = bspline_values(f, cell_centers(f.grid));
    double tol = 1e-10 * (1.0 + max_abs(f.samples));
    for (std::int64_t i = 0; i < std::ssize(vals); ++i)
        REQUIRE(std::abs(vals[i] - f.samples[i]) <= tol);
}

TEST_CASE("evaluation without coefficients is rejected") {
    ScalarField f = constant_field(make_grid(2, 8), 1.0);
    std::vector<double> vals(1);
    std::vector<double> pt{0.5, 0.5};
    REQUIRE_THROWS_AS(bspline_eval(f, pt, vals), std::invalid_argument);
}

TEST_CASE("evaluation validates buffer shapes") {
    ScalarField f = bspline_fit(constant_field(make_grid(2, 8), 1.0));
    std::vector<double> pts{0.5, 0.5, 0.25, 0.25};
    std::vector<double> short_vals(1);
    REQUIRE_THROWS_AS(bspline_eval(f, pts, short_vals), std::invalid_argument);
    std::vector<double> vals(2), bad_grads(3);
    REQUIRE_THROWS_AS(bspline_eval(f, pts, vals, bad_grads), std::invalid_argument);
    std::vector<double> ragged{0.5, 0.5, 0.25};
    REQUIRE_THROWS_AS(bspline_eval(f, ragged, vals), std::invalid_argument);
}
