#pragma once

#include "anisolab/planefield.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace anisolab {

/// Flat binary layout, little endian: u32 nx, u32 ny, f64 hx, hy, ox, oy,
/// then fx ((nx+1)*ny doubles, i fastest) and fy (nx*(ny+1) doubles).
inline void writeGridFieldBinary(const GridField& f, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("writeGridFieldBinary: cannot open " + path.string());
    const std::uint32_t nx = f.grid.nx, ny = f.grid.ny;
    const double header[4] = {f.grid.hx, f.grid.hy, f.grid.origin.x(), f.grid.origin.y()};
    out.write(reinterpret_cast<const char*>(&nx), 4);
    out.write(reinterpret_cast<const char*>(&ny), 4);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(f.fx.data()), f.fx.size() * sizeof(double));
    out.write(reinterpret_cast<const char*>(f.fy.data()), f.fy.size() * sizeof(double));
}

inline GridField readGridFieldBinary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("readGridFieldBinary: cannot open " + path.string());
    std::uint32_t nx = 0, ny = 0;
    double header[4];
    in.read(reinterpret_cast<char*>(&nx), 4);
    in.read(reinterpret_cast<char*>(&ny), 4);
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    GridSpec g{static_cast<int>(nx), static_cast<int>(ny), header[0], header[1],
               Vec2(header[2], header[3])};
    GridField f = GridField::zeros(g);
    in.read(reinterpret_cast<char*>(f.fx.data()), f.fx.size() * sizeof(double));
    in.read(reinterpret_cast<char*>(f.fy.data()), f.fy.size() * sizeof(double));
    if (!in) throw std::runtime_error("readGridFieldBinary: truncated file");
    return f;
}

/// Cell-centered CSV for plotting: x, y, sx, sy.
inline void writeGridFieldCsv(const GridField& f, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("writeGridFieldCsv: cannot open " + path.string());
    out.precision(12);
    out << "x,y,sx,sy\n";
    for (int j = 0; j < f.grid.ny; ++j)
        for (int i = 0; i < f.grid.nx; ++i) {
            const Vec2 v = f.cellValue(i, j);
            out << f.grid.xAt(i) + 0.5 * f.grid.hx << ',' << f.grid.yAt(j) + 0.5 * f.grid.hy
                << ',' << v.x() << ',' << v.y() << '\n';
        }
}

inline void writeScalarFieldCsv(const ScalarField& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("writeScalarFieldCsv: cannot open " + path.string());
    out.precision(12);
    out << "x,y,value\n";
    for (int j = 0; j < s.grid.ny; ++j)
        for (int i = 0; i < s.grid.nx; ++i)
            out << s.grid.xAt(i) + 0.5 * s.grid.hx << ',' << s.grid.yAt(j) + 0.5 * s.grid.hy
                << ',' << s.at(i, j) << '\n';
}

}  // namespace anisolab
