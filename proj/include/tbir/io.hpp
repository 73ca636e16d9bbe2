#pragma once

// Container formats.  All three are a single ASCII header line followed by
// raw little-endian float64 payload in the container's canonical order:
//
//   TBIR-F n m\n                  image samples, lexicographic (x fastest)
//   TBIR-V n m pad m_t\n          velocity dofs, time-major then component
//   TBIR-S p q L\n  + angle line  sinogram, angle-major rows
//
// A fourth header token on TBIR-S (slice count) extends the format to
// stacked 3D sinograms; it is omitted for the 2D case.  Read failures throw
// FileFormatError carrying the path and byte offset of the problem.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tbir/grid.hpp"
#include "tbir/radon.hpp"
#include "tbir/velocity.hpp"

namespace tbir {

class FileFormatError : public std::invalid_argument {
  public:
    FileFormatError(const std::string& path, std::int64_t offset, const std::string& what)
        : std::invalid_argument(path + " (byte " + std::to_string(offset) + "): " + what) {}
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_doubles(std::ofstream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

struct Reader {
    std::string path;
    std::ifstream in;
    std::int64_t offset = 0;

    explicit Reader(const std::string& p) : path(p), in(p, std::ios::binary) {
        if (!in) throw FileFormatError(path, 0, "cannot open file");
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw FileFormatError(path, offset, what);
    }

    std::string header_line() {
        std::string line;
        if (!std::getline(in, line)) fail("missing header line");
        offset += std::ssize(line) + 1;
        return line;
    }

    void read_doubles(std::vector<double>& v) {
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != v.size() * sizeof(double)) {
            offset += in.gcount();
            fail("payload truncated");
        }
        offset += static_cast<std::int64_t>(v.size() * sizeof(double));
    }

    void expect_eof() {
        if (in.peek() != std::char_traits<char>::eof()) fail("trailing data after payload");
    }
};

// Pulls typed tokens out of a header line, reporting byte offsets of the
// token that failed to parse.
struct HeaderScan {
    const Reader* r;
    std::istringstream ss;
    std::int64_t line_start;

    HeaderScan(const Reader& reader, const std::string& line, std::int64_t start)
        : r(&reader), ss(line), line_start(start) {}

    template <typename T>
    T next(const char* what) {
        std::int64_t pos = static_cast<std::int64_t>(ss.tellg());
        std::int64_t at = line_start + (pos < 0 ? 0 : pos);
        T v{};
        if (!(ss >> v)) throw FileFormatError(r->path, at, std::string("expected ") + what);
        return v;
    }

    bool try_next_int(std::int64_t& v) {
        std::streampos at = ss.tellg();
        if (ss >> v) return true;
        ss.clear();
        ss.seekg(at);
        return false;
    }

    void done(const char* format) {
        std::string extra;
        if (ss >> extra)
            throw FileFormatError(r->path, line_start, std::string("unexpected token in ") +
                                                           format + " header: '" + extra + "'");
    }
};

}  // namespace detail

inline void write_field(const std::string& path, const ScalarField& f) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << "TBIR-F " << f.grid.n << " " << f.grid.m << "\n";
    detail::write_doubles(out, f.samples);
    if (!out) throw std::invalid_argument("write failed: " + path);
}

inline ScalarField read_field(const std::string& path) {
    detail::Reader r(path);
    std::string line = r.header_line();
    detail::HeaderScan h(r, line, 0);
    if (h.next<std::string>("magic") != "TBIR-F") throw FileFormatError(path, 0, "not a TBIR-F file");
    int n = h.next<int>("dimension");
    int m = h.next<int>("cells per axis");
    h.done("TBIR-F");
    GridSpec g;
    try {
        g = make_grid(n, m);
    } catch (const std::invalid_argument& e) {
        throw FileFormatError(path, 0, e.what());
    }
    std::vector<double> samples(g.size());
    r.read_doubles(samples);
    r.expect_eof();
    return ScalarField{g, std::move(samples), {}};
}

inline void write_velocity(const std::string& path, const VelocityField& v) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << "TBIR-V " << v.grid.n << " " << v.grid.m << " " << v.grid.pad << " " << v.time_cells
        << "\n";
    detail::write_doubles(out, v.dofs);
    if (!out) throw std::invalid_argument("write failed: " + path);
}

inline VelocityField read_velocity(const std::string& path) {
    detail::Reader r(path);
    std::string line = r.header_line();
    detail::HeaderScan h(r, line, 0);
    if (h.next<std::string>("magic") != "TBIR-V") throw FileFormatError(path, 0, "not a TBIR-V file");
    int n = h.next<int>("dimension");
    int m = h.next<int>("cells per axis");
    int pad = h.next<int>("padding");
    int mt = h.next<int>("time cells");
    h.done("TBIR-V");
    VelocityField v;
    try {
        v.grid = make_grid(n, m, pad);
        if (mt < 1) throw std::invalid_argument("velocity: need at least one time cell");
    } catch (const std::invalid_argument& e) {
        throw FileFormatError(path, 0, e.what());
    }
    v.time_cells = mt;
    v.dofs.assign(v.dof_count(), 0.0);
    r.read_doubles(v.dofs);
    r.expect_eof();
    return v;
}

inline void write_sinogram(const std::string& path, const Sinogram& s) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << "TBIR-S " << s.geom.num_angles() << " " << s.geom.bins << " "
        << detail::format_double(s.geom.length);
    if (s.slices > 1) out << " " << s.slices;
    out << "\n";
    for (int a = 0; a < s.geom.num_angles(); ++a) {
        if (a) out << " ";
        out << detail::format_double(s.geom.angles_deg[a]);
    }
    out << "\n";
    detail::write_doubles(out, s.samples);
    if (!out) throw std::invalid_argument("write failed: " + path);
}

inline Sinogram read_sinogram(const std::string& path) {
    detail::Reader r(path);
    std::string line = r.header_line();
    detail::HeaderScan h(r, line, 0);
    if (h.next<std::string>("magic") != "TBIR-S") throw FileFormatError(path, 0, "not a TBIR-S file");
    int p = h.next<int>("angle count");
    int q = h.next<int>("bin count");
    double L = h.next<double>("detector length");
    std::int64_t slices = 1;
    h.try_next_int(slices);
    h.done("TBIR-S");
    if (p < 1 || q < 1 || !(L > 0.0) || slices < 1)
        throw FileFormatError(path, 0, "bad TBIR-S header values");

    std::int64_t angle_line_start = r.offset;
    std::string angle_line = r.header_line();
    detail::HeaderScan ah(r, angle_line, angle_line_start);
    RadonGeometry geom;
    geom.bins = q;
    geom.length = L;
    geom.angles_deg.resize(p);
    for (int a = 0; a < p; ++a) geom.angles_deg[a] = ah.next<double>("angle");
    ah.done("TBIR-S angle");

    Sinogram s = make_sinogram(std::move(geom), static_cast<int>(slices));
    r.read_doubles(s.samples);
    r.expect_eof();
    return s;
}

// 16-bit big-endian binary PGM, min-max normalized.  The first image row
// written is the top of the picture (largest y); volumes export their
// middle slice.
inline void export_pgm(const std::string& path, const ScalarField& f) {
    const int m = f.grid.m;
    const std::int64_t slab = static_cast<std::int64_t>(m) * m;
    const double* plane = f.samples.data() + (f.grid.n == 3 ? (m / 2) * slab : 0);

    double lo = plane[0], hi = plane[0];
    for (std::int64_t i = 0; i < slab; ++i) {
        lo = plane[i] < lo ? plane[i] : lo;
        hi = plane[i] > hi ? plane[i] : hi;
    }
    const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << "P5\n" << m << " " << m << "\n65535\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(m) * 2);
    for (int y = m - 1; y >= 0; --y) {
        for (int x = 0; x < m; ++x) {
            double v = (plane[x + static_cast<std::int64_t>(m) * y] - lo) * scale;
            unsigned int q = static_cast<unsigned int>(v + 0.5);
            if (q > 65535) q = 65535;
            row[2 * x] = static_cast<unsigned char>(q >> 8);
            row[2 * x + 1] = static_cast<unsigned char>(q & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()), std::ssize(row));
    }
    if (!out) throw std::invalid_argument("write failed: " + path);
}

}  // namespace tbir
