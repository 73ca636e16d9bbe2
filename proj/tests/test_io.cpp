#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tbir/io.hpp"
#include "test_helpers.hpp"

namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / ("tbir_io_" + name)).string();
}

void write_bytes(const std::string& path, const std::string& text, std::int64_t pad_doubles = 0) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    std::vector<double> z(pad_doubles, 0.0);
    out.write(reinterpret_cast<const char*>(z.data()),
              static_cast<std::streamsize>(z.size() * sizeof(double)));
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("field files survive a round trip bit for bit", "[io]") {
    for (int n : {2, 3}) {
        tbir::ScalarField f = testutil::random_field(tbir::make_grid(n, 8), 100 + n);
        std::string path = temp_path("field" + std::to_string(n) + ".tbir");
        tbir::write_field(path, f);
        tbir::ScalarField g = tbir::read_field(path);
        REQUIRE(g.grid.n == n);
        REQUIRE(g.grid.m == 8);
        REQUIRE(g.grid.pad == 0);
        for (std::int64_t i = 0; i < std::ssize(f.samples); ++i)
            REQUIRE(g.samples[i] == f.samples[i]);
        fs::remove(path);
    }
}

TEST_CASE("velocity files carry grid, padding and time planes exactly", "[io]") {
    tbir::VelocityField v = tbir::make_velocity(2, 16, 3);
    v.dofs = testutil::random_vector(v.dof_count(), 77);
    std::string path = temp_path("vel.tbir");
    tbir::write_velocity(path, v);
    tbir::VelocityField w = tbir::read_velocity(path);
    REQUIRE(w.grid.n == 2);
    REQUIRE(w.grid.m == 16);
    REQUIRE(w.grid.pad == v.grid.pad);
    REQUIRE(w.time_cells == 3);
    for (std::int64_t i = 0; i < std::ssize(v.dofs); ++i) REQUIRE(w.dofs[i] == v.dofs[i]);
    fs::remove(path);
}

TEST_CASE("sinogram files round trip geometry, slices and samples", "[io]") {
    tbir::RadonGeometry geom;
    geom.angles_deg = {0.0, 33.75, 157.5};
    geom.bins = 12;

    SECTION("single slice omits the slice token") {
        tbir::Sinogram s = tbir::make_sinogram(geom);
        s.samples = testutil::random_vector(s.size(), 55);
        std::string path = temp_path("sino2.tbir");
        tbir::write_sinogram(path, s);
        std::string raw = slurp(path);
        REQUIRE(raw.substr(0, raw.find('\n')) == "TBIR-S 3 12 1.4142135623730951");
        tbir::Sinogram t = tbir::read_sinogram(path);
        REQUIRE(t.slices == 1);
        REQUIRE(t.geom.bins == 12);
        REQUIRE(t.geom.length == s.geom.length);
        REQUIRE(t.geom.angles_deg == s.geom.angles_deg);
        for (std::int64_t i = 0; i < s.size(); ++i) REQUIRE(t.samples[i] == s.samples[i]);
        fs::remove(path);
    }
    SECTION("stacked sinograms keep the slice count") {
        tbir::Sinogram s = tbir::make_sinogram(geom, 8);
        s.samples = testutil::random_vector(s.size(), 56);
        std::string path = temp_path("sino3.tbir");
        tbir::write_sinogram(path, s);
        tbir::Sinogram t = tbir::read_sinogram(path);
        REQUIRE(t.slices == 8);
        REQUIRE(t.size() == s.size());
        for (std::int64_t i = 0; i < s.size(); ++i) REQUIRE(t.samples[i] == s.samples[i]);
        fs::remove(path);
    }
}

TEST_CASE("read failures carry the path and byte offset", "[io]") {
    SECTION("missing file") {
        REQUIRE_THROWS_AS(tbir::read_field(temp_path("does_not_exist.tbir")),
                          tbir::FileFormatError);
    }
    SECTION("wrong magic") {
        std::string path = temp_path("magic.tbir");
        write_bytes(path, "NOPE 2 8\n", 64);
        REQUIRE_THROWS_WITH(tbir::read_field(path),
                            Catch::Matchers::ContainsSubstring("not a TBIR-F file"));
        fs::remove(path);
    }
    SECTION("truncated payload reports where the data ran out") {
        std::string path = temp_path("short.tbir");
        write_bytes(path, "TBIR-F 2 8\n", 10);  // 64 doubles expected, 10 written
        try {
            tbir::read_field(path);
            FAIL("expected FileFormatError");
        } catch (const tbir::FileFormatError& e) {
            std::string msg = e.what();
            REQUIRE(msg.find("truncated") != std::string::npos);
            REQUIRE(msg.find("(byte 91)") != std::string::npos);  // 11 header + 80 payload
            REQUIRE(msg.find(path) != std::string::npos);
        }
        fs::remove(path);
    }
    SECTION("trailing bytes are rejected") {
        std::string path = temp_path("trail.tbir");
        write_bytes(path, "TBIR-F 2 8\n", 65);
        REQUIRE_THROWS_WITH(tbir::read_field(path),
                            Catch::Matchers::ContainsSubstring("trailing data"));
        fs::remove(path);
    }
    SECTION("malformed header tokens") {
        std::string path = temp_path("tok.tbir");
        write_bytes(path, "TBIR-F x 8\n", 64);
        REQUIRE_THROWS_WITH(tbir::read_field(path),
                            Catch::Matchers::ContainsSubstring("expected dimension"));
        write_bytes(path, "TBIR-F 2 8 9\n", 64);
        REQUIRE_THROWS_WITH(tbir::read_field(path),
                            Catch::Matchers::ContainsSubstring("unexpected token"));
        write_bytes(path, "TBIR-F 5 8\n", 64);
        REQUIRE_THROWS_AS(tbir::read_field(path), tbir::FileFormatError);
        fs::remove(path);
    }
    SECTION("velocity and sinogram header validation") {
        std::string path = temp_path("bad.tbir");
        write_bytes(path, "TBIR-V 2 8 4 0\n");
        REQUIRE_THROWS_AS(tbir::read_velocity(path), tbir::FileFormatError);
        write_bytes(path, "TBIR-S 0 4 1.0\n0\n");
        REQUIRE_THROWS_AS(tbir::read_sinogram(path), tbir::FileFormatError);
        write_bytes(path, "TBIR-S 1 4 -1.0\n0\n", 4);
        REQUIRE_THROWS_AS(tbir::read_sinogram(path), tbir::FileFormatError);
        fs::remove(path);
    }
}

TEST_CASE("pgm export writes 16-bit rows top down", "[io]") {
    tbir::GridSpec g = tbir::make_grid(2, 16);
    tbir::ScalarField f{g, std::vector<double>(g.size()), {}};
    std::vector<double> centers = tbir::cell_centers(g);
    for (std::int64_t p = 0; p < g.size(); ++p) f.samples[p] = centers[p * 2 + 1];  // ramp in y

    std::string path = temp_path("ramp.pgm");
    tbir::export_pgm(path, f);
    std::string raw = slurp(path);
    const std::string header = "P5\n16 16\n65535\n";
    REQUIRE(raw.substr(0, header.size()) == header);
    REQUIRE(raw.size() == header.size() + 16 * 16 * 2);

    const unsigned char* px = reinterpret_cast<const unsigned char*>(raw.data() + header.size());
    auto pixel = [&](int row, int col) {
        return (static_cast<unsigned int>(px[2 * (col + 16 * row)]) << 8) |
               px[2 * (col + 16 * row) + 1];
    };
    REQUIRE(pixel(0, 0) == 65535);   // first file row is the top of the image
    REQUIRE(pixel(15, 0) == 0);      // last file row is the bottom
    REQUIRE(pixel(0, 15) == 65535);  // constant across each row
    fs::remove(path);
}
