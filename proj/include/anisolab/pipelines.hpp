#pragma once

#include "anisolab/config.hpp"
#include "anisolab/generators.hpp"
#include "anisolab/grid_io.hpp"
#include "anisolab/mesh_io.hpp"

#include <filesystem>

namespace anisolab {

namespace fs = std::filesystem;

inline TriVarifold meshFromConfig(const ExperimentConfig& cfg) {
    if (!cfg.meshPath.empty()) {
        fs::path mult = cfg.meshPath + ".mult";
        return readOFF(cfg.meshPath, fs::exists(mult) ? mult : fs::path{});
    }
    const Json& p = cfg.generatorParams;
    if (cfg.meshGenerator == "icosphere")
        return icosphere(p.value("subdiv", 4), p.value("radius", 1.0));
    if (cfg.meshGenerator == "torus")
        return torusMesh(p.value("R", 2.0), p.value("r", 0.5), p.value("nu", 128),
                         p.value("nv", 64));
    if (cfg.meshGenerator == "graph") {
        const double amp = p.value("amp", 0.3);
        const std::uint64_t seed = cfg.seed;
        Rng rng(seed);
        const double kx = rng.uniform(1.0, 2.5) * M_PI, ky = rng.uniform(1.0, 2.5) * M_PI;
        const double ph = rng.uniform(0.0, 2.0 * M_PI);
        return graphMesh(p.value("n", 64), [amp, kx, ky, ph](double x, double y) {
            return amp * std::sin(kx * x + ph) * std::sin(ky * y);
        });
    }
    throw std::invalid_argument("meshFromConfig: no mesh path and unknown generator '" +
                                cfg.meshGenerator + "'");
}

/// Grid centered on the projected support of V with one-cell margins.
inline GridSpec fittedGrid(const TriVarifold& V, int n) {
    Vec2 lo(1e300, 1e300), hi(-1e300, -1e300);
    for (const Vec3& p : V.vertices) {
        lo = lo.cwiseMin(Vec2(p.x(), p.y()));
        hi = hi.cwiseMax(Vec2(p.x(), p.y()));
    }
    const Vec2 span = hi - lo;
    const double pad = 0.08 * std::max(span.x(), span.y());
    GridSpec g;
    g.nx = g.ny = n;
    g.hx = (span.x() + 2 * pad) / n;
    g.hy = (span.y() + 2 * pad) / n;
    g.origin = lo - Vec2(pad, pad);
    return g;
}

/// chi = indicator of cells receiving projected support mass.
inline ScalarField occupancyChi(const PlaneProjection& proj) {
    ScalarField chi = ScalarField::zeros(proj.S.grid);
    for (int j = 0; j < chi.grid.ny; ++j)
        for (int i = 0; i < chi.grid.nx; ++i) {
            const double m = proj.S.cellValue(i, j).norm() + proj.T.cellValue(i, j).norm();
            chi.at(i, j) = m > 0.0 ? 1.0 : 0.0;
        }
    return chi;
}

struct PipelineResult {
    Json report;
    bool anyCheckFailed = false;
};

inline PipelineResult runMsRatioPipeline(const ExperimentConfig& cfg) {
    PipelineResult out;
    const Integrand F = integrandFromJson(cfg.integrand);
    const TriVarifold V = meshFromConfig(cfg);

    out.report["stages"] = Json::array();
    auto stage = [&out](const std::string& name, const Json& data) {
        Json s;
        s["stage"] = name;
        s["data"] = data;
        out.report["stages"].push_back(s);
    };

    const Report conv = checkConvexityAC(F, 1000, cfg.seed);
    stage("integrand.checkConvexityAC", reportToJson(conv));
    if (!conv.pass) throw std::runtime_error("ms-ratio: integrand failed the convexity check");

    const Normalization norm = computeNormalization(F);
    stage("normalize.computeNormalization",
          Json{{"achieved_det", norm.achievedDet},
               {"geo_margin", norm.geoMargin},
               {"iterations", norm.iterations},
               {"L", {{norm.L(0, 0), norm.L(0, 1), norm.L(0, 2)},
                      {norm.L(1, 0), norm.L(1, 1), norm.L(1, 2)},
                      {norm.L(2, 0), norm.L(2, 1), norm.L(2, 2)}}}});

    const Report ms = msRatio(V, F);
    stage("varifold.msRatio", reportToJson(ms));
    out.anyCheckFailed |= !ms.pass;

    // projected-field checks in the normalized frame
    const Integrand G = pushforward(F, norm.L);
    TriVarifold V2 = transform(V, norm.L);
    const Mat3 P = choosePermutation(V2);
    V2 = transform(V2, P);
    const Integrand G2 = pushforward(G, P);
    const EdgeMeasure em = firstVariation(V2, G2);
    const double fvTV = em.totalVariation();

    const GridSpec grid = fittedGrid(V2, cfg.gridN);
    const PlaneProjection proj = projectToPlane(V2, G2, grid);
    const double dS = divTV(proj.S), dT = divTV(proj.T);
    stage("varifold.projectToPlane",
          Json{{"grid", gridSpecToJson(grid)},
               {"div_tv_s", dS},
               {"div_tv_t", dT},
               {"first_variation_tv", fvTV},
               {"div_link_ratio_s", dS / fvTV},
               {"div_link_ratio_t", dT / fvTV}});
    out.anyCheckFailed |= dS > 1.2 * fvTV || dT > 1.2 * fvTV;

    const ScalarField chi = occupancyChi(proj);
    const Report kb = checkKakBis(proj.S, proj.T, chi, /*cCap=*/10.0);
    stage("planefield.checkKakBis", reportToJson(kb));
    out.anyCheckFailed |= !kb.pass;

    if (!cfg.outDir.empty()) {
        fs::create_directories(cfg.outDir);
        writeGridFieldBinary(proj.S, fs::path(cfg.outDir) / "projected_S.grid");
        writeGridFieldBinary(proj.T, fs::path(cfg.outDir) / "projected_T.grid");
        writeGridFieldCsv(proj.S, fs::path(cfg.outDir) / "projected_S.csv");
        writeGridFieldCsv(proj.T, fs::path(cfg.outDir) / "projected_T.csv");
        writeScalarFieldCsv(divergence(proj.S), fs::path(cfg.outDir) / "div_S.csv");
    }
    return out;
}

inline PipelineResult runDetSharpnessPipeline(const ExperimentConfig& cfg) {
    PipelineResult out;
    out.report["stages"] = Json::array();
    const double angleS = 28.0 * M_PI / 180.0;
    const double angleT = 118.0 * M_PI / 180.0;
    Json res = Json::array();
    double prevGap = -1.0;
    for (int n : {cfg.gridN, 2 * cfg.gridN}) {
        GridSpec g{n, n, 1.0 / n, 1.0 / n, Vec2(0.0, 0.0)};
        const CrossingTubes tubes = makeCrossingTubes(g, cfg.eps, 1.0, angleS, angleT);
        const Report r = checkDetSimple(tubes.S, tubes.T);
        const double ratio = r.detail.at("ratio");
        Json entry = reportToJson(r);
        entry["grid"] = n;
        entry["gap"] = 1.0 - ratio;
        if (prevGap > 0.0) entry["gap_shrink_factor"] = prevGap / (1.0 - ratio);
        prevGap = 1.0 - ratio;
        res.push_back(entry);
        out.anyCheckFailed |= !r.pass;
    }
    out.report["stages"].push_back(Json{{"stage", "planefield.checkDetSimple"}, {"data", res}});
    return out;
}

inline PipelineResult runGammaPipeline(const ExperimentConfig& cfg) {
    PipelineResult out;
    const double gamma = gammaEstimate(std::max(200, cfg.gridN));
    out.report["stages"] = Json::array({Json{{"stage", "integrand.gammaEstimate"},
                                             {"data", Json{{"gamma_hat", gamma},
                                                           {"pass", gamma > 4.0}}}}});
    out.anyCheckFailed = !(gamma > 4.0);
    return out;
}

inline PipelineResult runKakCorpusPipeline(const ExperimentConfig& cfg) {
    PipelineResult out;
    out.report["stages"] = Json::array();
    const int nCases = static_cast<int>(cfg.generatorParams.value("cases", 20));
    GridSpec g{cfg.gridN, cfg.gridN, 1.0 / cfg.gridN, 1.0 / cfg.gridN, Vec2(0.0, 0.0)};
    int failures = 0;
    double maxCHat = 0.0;
    Json cases = Json::array();
    for (int c = 0; c < nCases; ++c) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(c);
        const TransverseFlowPair pair = makeTransversePair(seed);
        const GridField S = rasterizeSmooth(pair.S.value, g);
        const GridField T = rasterizeSmooth(pair.T.value, g);
        const ScalarField chi = diskChi(g, Vec2(0.5, 0.5), 0.35);
        const Report det = checkDetSimple(S, T);
        const Report tris = checkKakTris(S, T, chi);
        const SmoothField Sp = addSignViolation(pair.S, seed ^ 0xabcdef);
        const GridField Spert = rasterizeSmooth(Sp.value, g);
        const Report kb = checkKakBis(Spert, T, chi, 10.0);
        maxCHat = std::max(maxCHat, kb.detail.at("c_hat"));
        failures += (!det.pass || !tris.pass || !kb.pass) ? 1 : 0;
        cases.push_back(Json{{"seed", seed},
                             {"det_pass", det.pass},
                             {"tris_pass", tris.pass},
                             {"kakbis_c_hat", kb.detail.at("c_hat")}});
    }
    out.report["stages"].push_back(Json{{"stage", "planefield.corpus"},
                                        {"data", Json{{"cases", cases},
                                                      {"failures", failures},
                                                      {"max_c_hat", maxCHat}}}});
    out.anyCheckFailed = failures > 0;
    return out;
}

inline PipelineResult runPipeline(const ExperimentConfig& cfg) {
    PipelineResult out;
    if (cfg.pipeline == "ms-ratio")
        out = runMsRatioPipeline(cfg);
    else if (cfg.pipeline == "det-sharpness")
        out = runDetSharpnessPipeline(cfg);
    else if (cfg.pipeline == "gamma")
        out = runGammaPipeline(cfg);
    else if (cfg.pipeline == "kak-corpus")
        out = runKakCorpusPipeline(cfg);
    else
        throw std::invalid_argument("runPipeline: unknown pipeline '" + cfg.pipeline + "'");
    out.report["schema"] = 1;
    out.report["pipeline"] = cfg.pipeline;
    out.report["seed"] = cfg.seed;
    out.report["config"] = cfg.toJson();
    return out;
}

/// Executes the configured pipeline and writes report.json. Scientific
/// failures (pass=false) are data: exit 0 unless strict.
inline int runExperiment(const ExperimentConfig& cfg) {
    const PipelineResult res = runPipeline(cfg);
    if (!cfg.outDir.empty()) {
        fs::create_directories(cfg.outDir);
        std::ofstream out(fs::path(cfg.outDir) / "report.json");
        out << res.report.dump(2) << '\n';
    }
    return (cfg.strict && res.anyCheckFailed) ? 2 : 0;
}

/// Deterministic artifact generation by name.
inline int generateArtifact(const std::string& name, const Json& params,
                            const std::string& outDir, std::uint64_t seed) {
    fs::create_directories(outDir);
    if (name == "icosphere") {
        const TriVarifold V = icosphere(params.value("subdiv", 5), params.value("radius", 1.0));
        writeOFF(V, fs::path(outDir) / ("icosphere" + std::to_string(params.value("subdiv", 5)) +
                                        ".off"));
        return 0;
    }
    if (name == "torus") {
        const TriVarifold V = torusMesh(params.value("R", 2.0), params.value("r", 0.5),
                                        params.value("nu", 128), params.value("nv", 64));
        writeOFF(V, fs::path(outDir) / "torus.off");
        return 0;
    }
    if (name == "graph-over-square") {
        Rng rng(seed);
        const double amp = params.value("amp", 0.3);
        const double kx = rng.uniform(1.0, 2.5) * M_PI, ky = rng.uniform(1.0, 2.5) * M_PI;
        const double ph = rng.uniform(0.0, 2.0 * M_PI);
        const TriVarifold V = graphMesh(params.value("n", 64), [&](double x, double y) {
            return amp * std::sin(kx * x + ph) * std::sin(ky * y);
        });
        writeOFF(V, fs::path(outDir) / "graph.off");
        return 0;
    }
    if (name == "crossing-tubes") {
        const int n = params.value("grid", 512);
        GridSpec g{n, n, 1.0 / n, 1.0 / n, Vec2(0.0, 0.0)};
        const CrossingTubes tubes =
            makeCrossingTubes(g, params.value("eps", 0.05), params.value("weight", 1.0));
        writeGridFieldBinary(tubes.S, fs::path(outDir) / "tube_S.grid");
        writeGridFieldBinary(tubes.T, fs::path(outDir) / "tube_T.grid");
        return 0;
    }
    if (name == "transverse-flow-pair") {
        const int n = params.value("grid", 256);
        GridSpec g{n, n, 1.0 / n, 1.0 / n, Vec2(0.0, 0.0)};
        const TransverseFlowPair pair = makeTransversePair(seed);
        writeGridFieldBinary(rasterizeSmooth(pair.S.value, g), fs::path(outDir) / "flow_S.grid");
        writeGridFieldBinary(rasterizeSmooth(pair.T.value, g), fs::path(outDir) / "flow_T.grid");
        return 0;
    }
    if (name == "sheared-integrand") {
        Rng rng(seed);
        Mat3 M = Mat3::Identity();
        M(0, 1) = params.value("shear", rng.uniform(0.3, 0.9));
        Json spec{{"kind", "pushforward"},
                  {"base", Json{{"kind", "area"}}},
                  {"L", {{M(0, 0), M(0, 1), M(0, 2)},
                         {M(1, 0), M(1, 1), M(1, 2)},
                         {M(2, 0), M(2, 1), M(2, 2)}}}};
        std::ofstream out(fs::path(outDir) / "integrand.json");
        out << spec.dump(2) << '\n';
        return 0;
    }
    throw std::invalid_argument("generateArtifact: unknown generator '" + name + "'");
}

/// Runs each entry of a sweep config in sequence; reports are written to
/// per-entry subdirectories and an index is emitted at the top level.
inline int runSweep(const Json& sweepConfig) {
    if (sweepConfig.value("schema", 1) != 1)
        throw std::invalid_argument("runSweep: unsupported schema version");
    const std::string outDir = sweepConfig.value("out", std::string("sweep_out"));
    fs::create_directories(outDir);
    Json index = Json::array();
    int worst = 0;
    int entryId = 0;
    for (const Json& entry : sweepConfig.at("entries")) {
        ExperimentConfig cfg = ExperimentConfig::fromJson(entry);
        cfg.outDir = (fs::path(outDir) / ("entry_" + std::to_string(entryId))).string();
        const int rc = runExperiment(cfg);
        index.push_back(Json{{"entry", entryId}, {"pipeline", cfg.pipeline}, {"exit", rc}});
        worst = std::max(worst, rc);
        ++entryId;
    }
    std::ofstream out(fs::path(outDir) / "sweep_index.json");
    out << index.dump(2) << '\n';
    return worst;
}

}  // namespace anisolab
