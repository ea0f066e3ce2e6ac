#pragma once

#include "anisolab/integrand.hpp"
#include "anisolab/planefield.hpp"

#include <nlohmann/json.hpp>

namespace anisolab {

using Json = nlohmann::json;

/// Integrand specs:
///   {"kind":"area"}
///   {"kind":"lp","p":1.5}
///   {"kind":"pushforward","base":{...},"L":[[...],[...],[...]]}
///   {"kind":"perturbed","base":{...},"eps":0.02}
inline Integrand integrandFromJson(const Json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "area") return areaIntegrand();
    if (kind == "lp") return lpIntegrand(j.at("p").get<double>());
    if (kind == "pushforward") {
        const auto rows = j.at("L");
        if (rows.size() != 3) throw std::invalid_argument("integrandFromJson: L must be 3x3");
        Mat3 L;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) L(r, c) = rows.at(r).at(c).get<double>();
        return pushforward(integrandFromJson(j.at("base")), L);
    }
    if (kind == "perturbed")
        return perturbedIntegrand(integrandFromJson(j.at("base")), j.at("eps").get<double>());
    throw std::invalid_argument("integrandFromJson: unknown kind '" + kind + "'");
}

inline Json reportToJson(const Report& r) {
    Json j;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["slack"] = r.slack;
    j["pass"] = r.pass;
    j["detail"] = r.detail;
    return j;
}

inline Json gridSpecToJson(const GridSpec& g) {
    return Json{{"nx", g.nx}, {"ny", g.ny}, {"hx", g.hx}, {"hy", g.hy},
                {"origin", {g.origin.x(), g.origin.y()}}};
}

struct ExperimentConfig {
    int schema = 1;
    std::string pipeline;
    Json integrand = Json{{"kind", "area"}};
    std::string meshPath;       // OFF input, or empty when a generator is used
    std::string meshGenerator;  // icosphere | torus | graph
    Json generatorParams = Json::object();
    int gridN = 256;
    double eps = 0.02;
    std::uint64_t seed = 1;
    bool strict = false;
    std::string outDir = "out";
    Json toleranceOverrides = Json::object();

    static ExperimentConfig fromJson(const Json& j) {
        ExperimentConfig c;
        c.schema = j.value("schema", 1);
        if (c.schema != 1)
            throw std::invalid_argument("ExperimentConfig: unsupported schema version");
        c.pipeline = j.at("pipeline").get<std::string>();
        if (j.contains("integrand")) c.integrand = j.at("integrand");
        c.meshPath = j.value("mesh", std::string{});
        c.meshGenerator = j.value("generator", std::string{});
        if (j.contains("generator_params")) c.generatorParams = j.at("generator_params");
        c.gridN = j.value("grid", 256);
        c.eps = j.value("eps", 0.02);
        c.seed = j.value("seed", static_cast<std::uint64_t>(1));
        c.strict = j.value("strict", false);
        c.outDir = j.value("out", std::string("out"));
        if (j.contains("tolerances")) c.toleranceOverrides = j.at("tolerances");
        return c;
    }

    Json toJson() const {
        Json j;
        j["schema"] = schema;
        j["pipeline"] = pipeline;
        j["integrand"] = integrand;
        if (!meshPath.empty()) j["mesh"] = meshPath;
        if (!meshGenerator.empty()) j["generator"] = meshGenerator;
        j["generator_params"] = generatorParams;
        j["grid"] = gridN;
        j["eps"] = eps;
        j["seed"] = seed;
        j["strict"] = strict;
        j["out"] = outDir;
        j["tolerances"] = toleranceOverrides;
        return j;
    }
};

}  // namespace anisolab
