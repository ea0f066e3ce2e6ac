#include "anisolab/anisolab.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>

using namespace anisolab;
using Catch::Approx;

namespace {

std::filesystem::path tempDir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("anisolab_test_" + tag);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("integrandFromJson: all kinds, nested, errors") {
    const Integrand area = integrandFromJson(Json{{"kind", "area"}});
    CHECK(eval(area, Vec3(0, 0, 2)) == Approx(2.0));

    const Integrand lp = integrandFromJson(Json{{"kind", "lp"}, {"p", 1.5}});
    CHECK(eval(lp, Vec3(1, 1, 1)) == Approx(2.080083823051904));

    Json push{{"kind", "pushforward"},
              {"base", Json{{"kind", "area"}}},
              {"L", {{2, 0, 0}, {0, 1, 0}, {0, 0, 1}}}};
    CHECK(eval(integrandFromJson(push), Vec3(1, 0, 0)) == Approx(2.0));

    Json pert{{"kind", "perturbed"}, {"base", Json{{"kind", "area"}}}, {"eps", 0.02}};
    CHECK(eval(integrandFromJson(pert), Vec3(0, 1, 0)) == Approx(1.02));

    CHECK_THROWS(integrandFromJson(Json{{"kind", "wulff"}}));
    CHECK_THROWS(integrandFromJson(Json{{"kind", "lp"}}));  // missing p
}

TEST_CASE("OFF round trip with multiplicity sidecar") {
    const auto dir = tempDir("off");
    const TriVarifold sphere = icosphere(2);
    std::vector<double> mult(sphere.triangleCount());
    Rng rng(61);
    for (double& m : mult) m = rng.uniform(0.5, 3.0);
    const TriVarifold v = TriVarifold::create(sphere.vertices, sphere.triangles, mult);

    writeOFF(v, dir / "m.off");
    writeMultiplicity(v, dir / "m.off.mult");
    const TriVarifold back = readOFF(dir / "m.off", dir / "m.off.mult");
    REQUIRE(back.vertices.size() == v.vertices.size());
    REQUIRE(back.triangles.size() == v.triangles.size());
    CHECK(mass(back) == Approx(mass(v)).epsilon(1e-14));
    CHECK(energy(back, lpIntegrand(3.0)) == Approx(energy(v, lpIntegrand(3.0))).epsilon(1e-14));

    const TriVarifold plain = readOFF(dir / "m.off");
    CHECK(plain.multiplicity[0] == 1.0);

    CHECK_THROWS(readOFF(dir / "missing.off"));
}

TEST_CASE("GridField binary and CSV round trip") {
    const auto dir = tempDir("grid");
    GridSpec g{16, 12, 0.25, 0.5, Vec2(-1.0, 2.0)};
    GridField f = GridField::zeros(g);
    Rng rng(62);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) f.fxAt(i, j) = rng.normal();
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f.fyAt(i, j) = rng.normal();

    writeGridFieldBinary(f, dir / "f.grid");
    const GridField back = readGridFieldBinary(dir / "f.grid");
    CHECK(back.grid.sameAs(f.grid));
    CHECK(back.fx == f.fx);  // bit-exact
    CHECK(back.fy == f.fy);

    writeGridFieldCsv(f, dir / "f.csv");
    std::ifstream csv(dir / "f.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "x,y,sx,sy");
}

TEST_CASE("ExperimentConfig: schema checks and round trip") {
    Json j{{"schema", 1}, {"pipeline", "gamma"}, {"grid", 300}, {"seed", 42}};
    const ExperimentConfig cfg = ExperimentConfig::fromJson(j);
    CHECK(cfg.pipeline == "gamma");
    CHECK(cfg.gridN == 300);
    CHECK(cfg.seed == 42);
    const ExperimentConfig cfg2 = ExperimentConfig::fromJson(cfg.toJson());
    CHECK(cfg2.toJson() == cfg.toJson());

    Json bad = j;
    bad["schema"] = 2;
    CHECK_THROWS(ExperimentConfig::fromJson(bad));
}

TEST_CASE("gamma pipeline reports the constant above 4") {
    ExperimentConfig cfg;
    cfg.pipeline = "gamma";
    cfg.gridN = 200;
    cfg.outDir.clear();
    const PipelineResult res = runPipeline(cfg);
    CHECK_FALSE(res.anyCheckFailed);
    const double gamma = res.report["stages"][0]["data"]["gamma_hat"].get<double>();
    CHECK(gamma > 4.0);
    CHECK(gamma == Approx(4.82842712474619).epsilon(1e-2));
}

TEST_CASE("det-sharpness pipeline: ratio in the sharp window at small grids") {
    ExperimentConfig cfg;
    cfg.pipeline = "det-sharpness";
    cfg.gridN = 128;
    cfg.eps = 0.05;
    cfg.outDir.clear();
    const PipelineResult res = runPipeline(cfg);
    CHECK_FALSE(res.anyCheckFailed);
    for (const Json& entry : res.report["stages"][0]["data"]) {
        CHECK(entry["pass"].get<bool>());
        CHECK(entry["detail"]["ratio"].get<double>() <= 1.0 + 1e-9);
        CHECK(entry["detail"]["ratio"].get<double>() >= 0.97);
    }
}

TEST_CASE("ms-ratio pipeline: stage traceability and sphere constant") {
    ExperimentConfig cfg;
    cfg.pipeline = "ms-ratio";
    cfg.meshGenerator = "icosphere";
    cfg.generatorParams = Json{{"subdiv", 3}};
    cfg.gridN = 128;
    cfg.outDir = (tempDir("msratio") / "out").string();
    const PipelineResult res = runPipeline(cfg);

    std::vector<std::string> stages;
    for (const Json& s : res.report["stages"]) stages.push_back(s["stage"]);
    const std::vector<std::string> expected = {
        "integrand.checkConvexityAC", "normalize.computeNormalization",
        "varifold.msRatio", "varifold.projectToPlane", "planefield.checkKakBis"};
    for (const std::string& e : expected)
        CHECK(std::find(stages.begin(), stages.end(), e) != stages.end());

    for (const Json& s : res.report["stages"])
        if (s["stage"] == "varifold.msRatio")
            CHECK(s["data"]["detail"]["c_hat"].get<double>() ==
                  Approx(1.0 / (4.0 * std::sqrt(M_PI))).epsilon(0.02));

    // report files written
    const int rc = runExperiment(cfg);
    CHECK(rc == 0);
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.outDir) / "report.json"));
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.outDir) / "projected_S.grid"));
}

TEST_CASE("determinism: identical config and seed give identical reports") {
    ExperimentConfig cfg;
    cfg.pipeline = "kak-corpus";
    cfg.gridN = 96;
    cfg.seed = 777;
    cfg.generatorParams = Json{{"cases", 3}};
    cfg.outDir.clear();
    const std::string a = runPipeline(cfg).report.dump();
    const std::string b = runPipeline(cfg).report.dump();
    CHECK(a == b);

    cfg.seed = 778;
    const std::string c = runPipeline(cfg).report.dump();
    CHECK(a != c);
}

TEST_CASE("generateArtifact: deterministic files") {
    const auto dir = tempDir("gen");
    CHECK(generateArtifact("icosphere", Json{{"subdiv", 3}}, dir.string(), 1) == 0);
    const TriVarifold v = readOFF(dir / "icosphere3.off");
    CHECK(v.triangleCount() == 20 * 64);

    CHECK(generateArtifact("crossing-tubes", Json{{"grid", 64}, {"eps", 0.06}},
                           dir.string(), 1) == 0);
    const GridField S = readGridFieldBinary(dir / "tube_S.grid");
    CHECK(S.grid.nx == 64);

    CHECK(generateArtifact("torus", Json{{"nu", 16}, {"nv", 8}}, dir.string(), 1) == 0);
    CHECK(generateArtifact("graph-over-square", Json{{"n", 8}}, dir.string(), 5) == 0);
    CHECK(generateArtifact("transverse-flow-pair", Json{{"grid", 32}}, dir.string(), 5) == 0);
    CHECK(generateArtifact("sheared-integrand", Json{{"shear", 0.5}}, dir.string(), 5) == 0);
    CHECK_THROWS(generateArtifact("mystery", Json::object(), dir.string(), 1));
}

TEST_CASE("sweep runs every entry and writes an index") {
    const auto dir = tempDir("sweep");
    Json sweep{{"schema", 1},
               {"out", (dir / "sweep").string()},
               {"entries",
                Json::array({Json{{"pipeline", "gamma"}, {"grid", 200}},
                             Json{{"pipeline", "det-sharpness"}, {"grid", 64}, {"eps", 0.08}}})}};
    CHECK(runSweep(sweep) == 0);
    CHECK(std::filesystem::exists(dir / "sweep" / "sweep_index.json"));
    CHECK(std::filesystem::exists(dir / "sweep" / "entry_0" / "report.json"));
    CHECK(std::filesystem::exists(dir / "sweep" / "entry_1" / "report.json"));
}

TEST_CASE("CLI binary: run and generate") {
    const auto dir = tempDir("cli");
    const std::string cli = ANISOLAB_CLI_PATH;
    REQUIRE(std::filesystem::exists(cli));

    const std::string out = (dir / "gamma_out").string();
    const int rc = std::system(
        (cli + " run --pipeline gamma --grid 200 --out " + out + " > /dev/null 2>&1").c_str());
    CHECK(rc == 0);
    std::ifstream rep(std::filesystem::path(out) / "report.json");
    REQUIRE(rep.good());
    Json j;
    rep >> j;
    CHECK(j["pipeline"] == "gamma");
    CHECK(j["stages"][0]["data"]["gamma_hat"].get<double>() > 4.0);

    const int rc2 = std::system(
        (cli + " generate icosphere --out " + (dir / "mesh").string() + " > /dev/null 2>&1")
            .c_str());
    CHECK(rc2 == 0);
    CHECK(std::filesystem::exists(dir / "mesh" / "icosphere5.off"));

    // config parse error -> nonzero exit
    const int rc3 =
        std::system((cli + " run --config /nonexistent.json > /dev/null 2>&1").c_str());
    CHECK(rc3 != 0);
}
