#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "tbir/noise.hpp"
#include "tbir/phantom.hpp"
#include "tbir/ssim.hpp"
#include "test_helpers.hpp"

namespace {

double mass(const tbir::ScalarField& f) {
    double cell = 1.0;
    for (int a = 0; a < f.grid.n; ++a) cell *= f.grid.h();
    double s = 0.0;
    for (double v : f.samples) s += v;
    return s * cell;
}

}  // namespace

TEST_CASE("disk pair has matching mass and doubled peak intensity", "[harness]") {
    auto [tpl, tgt] = tbir::make_phantom(tbir::PhantomKind::disk_pair, 128);
    double mt = mass(tpl), mg = mass(tgt);
    INFO("template mass " << mt << " target mass " << mg);
    REQUIRE(std::abs(mt - mg) <= 1e-3 * mt);

    // cell nearest the centre sits well inside both plateaus
    const int m = 128;
    std::int64_t c = (m / 2) + static_cast<std::int64_t>(m) * (m / 2);
    REQUIRE(tpl.samples[c] == 1.0);
    REQUIRE(tgt.samples[c] == 2.0);
}

TEST_CASE("3d disk pair preserves mass between ball and contracted ball", "[harness]") {
    auto [tpl, tgt] = tbir::make_phantom(tbir::PhantomKind::disk_pair, 32, 3);
    REQUIRE(tpl.grid.n == 3);
    double mt = mass(tpl), mg = mass(tgt);
    INFO("template mass " << mt << " target mass " << mg);
    REQUIRE(std::abs(mt - mg) <= 1e-2 * mt);
    std::int64_t c = 16 + 32 * (16 + 32 * std::int64_t{16});
    REQUIRE(tpl.samples[c] == 1.0);
    REQUIRE(tgt.samples[c] == 2.0);
}

TEST_CASE("zero warp amplitude reproduces the blob template", "[harness]") {
    tbir::GridSpec g = tbir::make_grid(2, 32);
    auto [tpl, tgt] = tbir::make_phantom(tbir::PhantomKind::blob_warp, 32);
    tbir::ScalarField unwarped = tbir::blob_image(g, 0.0);
    for (std::int64_t i = 0; i < g.size(); ++i) REQUIRE(tpl.samples[i] == unwarped.samples[i]);
}

TEST_CASE("identity affine blob equals the plain blob template", "[harness]") {
    tbir::GridSpec g = tbir::make_grid(2, 32);
    tbir::ScalarField plain = tbir::blob_image(g, 0.0);
    tbir::ScalarField affine = tbir::blob_affine_image(g, 0.0, 1.0, 1.0);
    for (std::int64_t i = 0; i < g.size(); ++i)
        REQUIRE(affine.samples[i] == Catch::Approx(plain.samples[i]).margin(1e-12));

    tbir::ScalarField doubled = tbir::blob_affine_image(g, 0.0, 1.0, 2.0);
    for (std::int64_t i = 0; i < g.size(); ++i)
        REQUIRE(doubled.samples[i] == 2.0 * affine.samples[i]);
}

TEST_CASE("phantom pairs differ from their templates", "[harness]") {
    for (tbir::PhantomKind kind :
         {tbir::PhantomKind::disk_pair, tbir::PhantomKind::blob_warp,
          tbir::PhantomKind::affine_warp}) {
        auto [tpl, tgt] = tbir::make_phantom(kind, 32);
        double diff = 0.0, scale = 0.0;
        for (std::int64_t i = 0; i < std::ssize(tpl.samples); ++i) {
            diff = std::max(diff, std::abs(tpl.samples[i] - tgt.samples[i]));
            scale = std::max(scale, std::abs(tpl.samples[i]));
        }
        INFO("kind " << static_cast<int>(kind));
        REQUIRE(diff > 1e-3 * scale);
    }
}

TEST_CASE("phantom kind parsing", "[harness]") {
    REQUIRE(tbir::parse_phantom_kind("disk_pair") == tbir::PhantomKind::disk_pair);
    REQUIRE(tbir::parse_phantom_kind("blob_warp") == tbir::PhantomKind::blob_warp);
    REQUIRE(tbir::parse_phantom_kind("affine_warp") == tbir::PhantomKind::affine_warp);
    REQUIRE_THROWS_AS(tbir::parse_phantom_kind("shepp"), std::invalid_argument);
    REQUIRE_THROWS_AS(tbir::blob_affine_image(tbir::make_grid(2, 16), 0.0, 0.0, 1.0),
                      std::invalid_argument);
}

TEST_CASE("zero noise level returns the data unchanged", "[harness]") {
    tbir::RadonGeometry geom;
    geom.angles_deg = {0.0, 90.0};
    geom.bins = 16;
    tbir::Sinogram s = tbir::make_sinogram(geom);
    s.samples = testutil::random_vector(s.size(), 42);
    tbir::Sinogram out = tbir::add_noise(s, 0.0, 7);
    for (std::int64_t i = 0; i < s.size(); ++i) REQUIRE(out.samples[i] == s.samples[i]);
    REQUIRE_THROWS_AS(tbir::add_noise(s, -0.1, 7), std::invalid_argument);
}

TEST_CASE("noise is reproducible per seed and scales with the data magnitude", "[harness]") {
    tbir::RadonGeometry geom;
    geom.angles_deg = {0.0};
    geom.bins = 20000;
    tbir::Sinogram s = tbir::make_sinogram(geom);
    for (double& v : s.samples) v = 2.0;  // mean |s| = 2, so level 0.05 gives sigma 0.1

    tbir::Sinogram a = tbir::add_noise(s, 0.05, 1234);
    tbir::Sinogram b = tbir::add_noise(s, 0.05, 1234);
    tbir::Sinogram c = tbir::add_noise(s, 0.05, 1235);
    bool differs = false;
    for (std::int64_t i = 0; i < s.size(); ++i) {
        REQUIRE(a.samples[i] == b.samples[i]);
        differs = differs || a.samples[i] != c.samples[i];
    }
    REQUIRE(differs);

    double mean = 0.0;
    for (std::int64_t i = 0; i < s.size(); ++i) mean += a.samples[i] - 2.0;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (std::int64_t i = 0; i < s.size(); ++i) {
        double d = a.samples[i] - 2.0 - mean;
        var += d * d;
    }
    var /= static_cast<double>(s.size() - 1);
    double sd = std::sqrt(var);
    INFO("empirical sd " << sd << " mean " << mean);
    REQUIRE(sd >= 0.090);
    REQUIRE(sd <= 0.110);
    REQUIRE(std::abs(mean) <= 0.005);
}

TEST_CASE("ssim of an image with itself is one", "[harness]") {
    tbir::GridSpec g = tbir::make_grid(2, 32);
    tbir::ScalarField a = tbir::blob_image(g, 0.0);
    REQUIRE(tbir::ssim(a, a) == 1.0);

    tbir::GridSpec g3 = tbir::make_grid(3, 16);
    tbir::ScalarField v = tbir::blob_image(g3, 0.0);
    REQUIRE(tbir::ssim(v, v) == 1.0);
}

TEST_CASE("ssim is invariant under joint rescaling", "[harness]") {
    tbir::GridSpec g = tbir::make_grid(2, 32);
    tbir::ScalarField a = tbir::blob_image(g, 0.0);
    tbir::ScalarField b = tbir::blob_image(g, 0.05);
    double base = tbir::ssim(a, b);
    REQUIRE(base < 1.0);

    tbir::ScalarField a2 = a, b2 = b;
    for (double& v : a2.samples) v *= 2.0;
    for (double& v : b2.samples) v *= 2.0;
    REQUIRE(tbir::ssim(a2, b2) == base);  // doubling is exact in floating point
}

TEST_CASE("ssim is stable under a joint constant shift of near-identical images", "[harness]") {
    tbir::GridSpec g = tbir::make_grid(2, 32);
    tbir::ScalarField a = tbir::blob_image(g, 0.0);
    tbir::ScalarField b = a;
    std::vector<double> bump = testutil::random_vector(g.size(), 321, -1e-4, 1e-4);
    for (std::int64_t i = 0; i < g.size(); ++i) b.samples[i] += bump[i];

    double base = tbir::ssim(a, b);
    tbir::ScalarField as = a, bs = b;
    for (double& v : as.samples) v += 0.5;
    for (double& v : bs.samples) v += 0.5;
    double shiftd = tbir::ssim(as, bs);
    INFO("base " << base << " shifted " << shiftd);
    REQUIRE(std::abs(shiftd - base) <= 1e-6);
}

TEST_CASE("ssim penalises anti-correlated structure", "[harness]") {
    tbir::GridSpec g = tbir::make_grid(2, 32);
    tbir::ScalarField a{g, std::vector<double>(g.size()), {}};
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            a.samples[x + 32 * static_cast<std::int64_t>(y)] = (x + y) % 2 ? 1.0 : 0.0;
    tbir::ScalarField b = a;
    for (double& v : b.samples) v = 1.0 - v;
    double s = tbir::ssim(a, b);
    INFO("anti-correlated ssim " << s);
    REQUIRE(s < 0.0);
}

TEST_CASE("ssim rejects mismatched or undersized grids", "[harness]") {
    tbir::ScalarField a{tbir::make_grid(2, 16), std::vector<double>(16 * 16, 0.0), {}};
    tbir::ScalarField b{tbir::make_grid(2, 32), std::vector<double>(32 * 32, 0.0), {}};
    REQUIRE_THROWS_AS(tbir::ssim(a, b), std::invalid_argument);
    tbir::ScalarField c{tbir::make_grid(2, 8), std::vector<double>(64, 0.0), {}};
    REQUIRE_THROWS_AS(tbir::ssim(c, c), std::invalid_argument);
}
