#pragma once

#include "anisolab/varifold.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace anisolab {

/// OFF text format: "OFF" header, counts line, vertex lines, face lines.
/// Only triangular faces are accepted.
inline TriVarifold readOFF(const std::filesystem::path& path,
                           const std::filesystem::path& multiplicityPath = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("readOFF: cannot open " + path.string());
    std::string token;
    in >> token;
    if (token != "OFF") throw std::runtime_error("readOFF: missing OFF header");
    size_t nv = 0, nf = 0, ne = 0;
    in >> nv >> nf >> ne;
    std::vector<Vec3> verts(nv);
    for (size_t i = 0; i < nv; ++i) in >> verts[i].x() >> verts[i].y() >> verts[i].z();
    std::vector<std::array<int, 3>> tris(nf);
    for (size_t f = 0; f < nf; ++f) {
        int k;
        in >> k;
        if (k != 3) throw std::runtime_error("readOFF: only triangle faces supported");
        in >> tris[f][0] >> tris[f][1] >> tris[f][2];
    }
    if (!in) throw std::runtime_error("readOFF: truncated file " + path.string());

    std::vector<double> mult;
    if (!multiplicityPath.empty()) {
        std::ifstream min(multiplicityPath);
        if (!min)
            throw std::runtime_error("readOFF: cannot open multiplicity sidecar " +
                                     multiplicityPath.string());
        double v;
        while (min >> v) mult.push_back(v);
        if (mult.size() != nf)
            throw std::runtime_error("readOFF: sidecar entry count mismatch");
    }
    return TriVarifold::create(std::move(verts), std::move(tris), std::move(mult));
}

inline void writeOFF(const TriVarifold& V, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("writeOFF: cannot open " + path.string());
    out.precision(17);
    out << "OFF\n" << V.vertices.size() << ' ' << V.triangles.size() << " 0\n";
    for (const Vec3& v : V.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : V.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline void writeMultiplicity(const TriVarifold& V, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("writeMultiplicity: cannot open " + path.string());
    out.precision(17);
    for (double m : V.multiplicity) out << m << '\n';
}

}  // namespace anisolab
