/*
 * Copyright 2026 The polarsep Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "decomposer.hpp"
#include "error.hpp"
#include "mosaic.hpp"
#include "pipeline.hpp"
#include "synth.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace polarsep {

using Json = nlohmann::ordered_json;

enum class InputMode
{
    four_files, ///< one image per polarizer angle, in 0/45/90/135 order
    mosaic,     ///< a single 2x2 polarization mosaic
};

struct PipelineConfig
{
    InputMode input_mode = InputMode::four_files;
    std::vector<std::string> inputs;
    MosaicLayout mosaic_layout;
    SeparationParams separation;
    std::string output_dir = "out";
    int png_bit_depth = 8;
    bool metrics = true;
    std::string ground_truth;    ///< diffuse reference image; empty for none
    std::string saturation_mask; ///< optional one-channel mask of saturated pixels

    void validate() const
    {
        std::size_t const want = input_mode == InputMode::mosaic ? 1 : 4;
        if (inputs.size() != want)
            throw UsageError(std::string(input_mode == InputMode::mosaic ? "mosaic" : "four-files") + " input needs " +
                             std::to_string(want) + " path(s), got " + std::to_string(inputs.size()));
        mosaic_layout.validate();
        separation.validate();
        if (output_dir.empty())
            throw UsageError("output directory must not be empty");
        if (png_bit_depth != 8 && png_bit_depth != 16)
            throw UsageError("png_bit_depth must be 8 or 16");
        if (!saturation_mask.empty() && ground_truth.empty())
            throw UsageError("saturation_mask requires ground_truth");
    }
};

namespace detail {

inline Json optional_number(std::optional<double> const &v)
{
    return v ? Json(*v) : Json(nullptr);
}

inline std::optional<double> read_optional_number(Json const &j, std::string const &key)
{
    if (j.is_null() || (j.is_string() && j.get<std::string>() == "auto"))
        return std::nullopt;
    if (!j.is_number())
        throw UsageError("config: '" + key + "' must be a number, null or \"auto\"");
    return j.get<double>();
}

template <typename T>
T read_value(Json const &j, std::string const &key)
{
    try {
        return j.get<T>();
    } catch (nlohmann::json::exception const &) {
        throw UsageError("config: '" + key + "' has the wrong type");
    }
}

inline void require_object(Json const &j, std::string const &key)
{
    if (!j.is_object())
        throw UsageError("config: '" + key + "' must be an object");
}

inline void reject_unknown(Json const &j, std::string const &where, std::set<std::string> const &known)
{
    for (auto const &[k, v] : j.items())
        if (!known.count(k))
            throw UsageError("config: unknown key '" + where + k + "'");
}

inline char const *to_string(IlluminantEstimator e)
{
    return e == IlluminantEstimator::polarized ? "polarized" : "max-rgb";
}

inline IlluminantEstimator parse_illuminant(std::string const &s)
{
    if (s == "polarized")
        return IlluminantEstimator::polarized;
    if (s == "max-rgb" || s == "max_rgb")
        return IlluminantEstimator::max_rgb;
    throw UsageError("unknown illuminant estimator '" + s + "' (expected polarized or max-rgb)");
}

inline char const *to_string(LStepForm f)
{
    return f == LStepForm::lagrangian ? "lagrangian" : "printed";
}

inline LStepForm parse_l_step(std::string const &s)
{
    if (s == "lagrangian")
        return LStepForm::lagrangian;
    if (s == "printed")
        return LStepForm::printed;
    throw UsageError("unknown l_step form '" + s + "' (expected lagrangian or printed)");
}

} // namespace detail

inline Json to_json(SolverConfig const &s)
{
    return Json{{"mode", to_string(s.mode)},
                {"lambda", detail::optional_number(s.lambda)},
                {"lambda_rule", to_string(s.lambda_rule)},
                {"gamma0", detail::optional_number(s.gamma0)},
                {"gamma_growth", s.gamma_growth},
                {"gamma_max", detail::optional_number(s.gamma_max)},
                {"mu0", detail::optional_number(s.mu0)},
                {"rho", s.rho},
                {"mu_max", s.mu_max},
                {"tol", s.tol},
                {"max_iters", s.max_iters},
                {"alpha", s.alpha},
                {"beta", s.beta},
                {"l_step", detail::to_string(s.l_step)}};
}

inline void apply_json(SolverConfig &s, Json const &j)
{
    using namespace detail;
    require_object(j, "solver");
    reject_unknown(j, "solver.", {"mode", "lambda", "lambda_rule", "gamma0", "gamma_growth", "gamma_max", "mu0", "rho",
                                  "mu_max", "tol", "max_iters", "alpha", "beta", "l_step"});
    if (j.contains("mode"))
        s.mode = parse_mode(read_value<std::string>(j["mode"], "solver.mode"));
    if (j.contains("lambda"))
        s.lambda = read_optional_number(j["lambda"], "solver.lambda");
    if (j.contains("lambda_rule"))
        s.lambda_rule = parse_lambda_rule(read_value<std::string>(j["lambda_rule"], "solver.lambda_rule"));
    if (j.contains("gamma0"))
        s.gamma0 = read_optional_number(j["gamma0"], "solver.gamma0");
    if (j.contains("gamma_growth"))
        s.gamma_growth = read_value<double>(j["gamma_growth"], "solver.gamma_growth");
    if (j.contains("gamma_max"))
        s.gamma_max = read_optional_number(j["gamma_max"], "solver.gamma_max");
    if (j.contains("mu0"))
        s.mu0 = read_optional_number(j["mu0"], "solver.mu0");
    if (j.contains("rho"))
        s.rho = read_value<double>(j["rho"], "solver.rho");
    if (j.contains("mu_max"))
        s.mu_max = read_value<double>(j["mu_max"], "solver.mu_max");
    if (j.contains("tol"))
        s.tol = read_value<double>(j["tol"], "solver.tol");
    if (j.contains("max_iters"))
        s.max_iters = read_value<int>(j["max_iters"], "solver.max_iters");
    if (j.contains("alpha"))
        s.alpha = read_value<double>(j["alpha"], "solver.alpha");
    if (j.contains("beta"))
        s.beta = read_value<double>(j["beta"], "solver.beta");
    if (j.contains("l_step"))
        s.l_step = parse_l_step(read_value<std::string>(j["l_step"], "solver.l_step"));
}

inline Json to_json(PipelineConfig const &c)
{
    auto const &p = c.separation;
    return Json{
        {"input",
         {{"mode", c.input_mode == InputMode::mosaic ? "mosaic" : "four-files"},
          {"paths", c.inputs},
          {"mosaic_layout", c.mosaic_layout.degrees}}},
        {"representations",
         {{"block_size", p.block_size}, {"n4", p.n4}, {"threshold", p.threshold}, {"seed", p.seed}}},
        {"illumination", {{"normalize", p.normalize_illumination}, {"estimator", detail::to_string(p.illuminant)}}},
        {"initializer",
         {{"window_radius", p.init.window_radius},
          {"guard_threshold", p.init.guard_threshold},
          {"change_tolerance", p.init.change_tolerance},
          {"max_iterations", p.init.max_iterations},
          {"saturation_level", p.init.saturation_level}}},
        {"solver", to_json(p.solver)},
        {"output", {{"dir", c.output_dir}, {"png_bit_depth", c.png_bit_depth}}},
        {"metrics",
         {{"enabled", c.metrics}, {"ground_truth", c.ground_truth}, {"saturation_mask", c.saturation_mask}}}};
}

/// Overrides the fields present in `j`; absent fields keep their current value.
inline void apply_json(PipelineConfig &c, Json const &j)
{
    using namespace detail;
    require_object(j, "");
    reject_unknown(j, "", {"input", "representations", "illumination", "initializer", "solver", "output", "metrics"});
    auto &p = c.separation;
    if (j.contains("input")) {
        auto const &in = j["input"];
        require_object(in, "input");
        reject_unknown(in, "input.", {"mode", "paths", "mosaic_layout"});
        if (in.contains("mode")) {
            auto const m = read_value<std::string>(in["mode"], "input.mode");
            if (m == "mosaic")
                c.input_mode = InputMode::mosaic;
            else if (m == "four-files" || m == "four_files")
                c.input_mode = InputMode::four_files;
            else
                throw UsageError("config: input.mode must be four-files or mosaic");
        }
        if (in.contains("paths"))
            c.inputs = read_value<std::vector<std::string>>(in["paths"], "input.paths");
        if (in.contains("mosaic_layout"))
            c.mosaic_layout.degrees = read_value<std::array<int, 4>>(in["mosaic_layout"], "input.mosaic_layout");
    }
    if (j.contains("representations")) {
        auto const &r = j["representations"];
        require_object(r, "representations");
        reject_unknown(r, "representations.", {"block_size", "n4", "threshold", "seed"});
        if (r.contains("block_size"))
            p.block_size = read_value<Index>(r["block_size"], "representations.block_size");
        if (r.contains("n4"))
            p.n4 = read_value<Index>(r["n4"], "representations.n4");
        if (r.contains("threshold"))
            p.threshold = read_value<double>(r["threshold"], "representations.threshold");
        if (r.contains("seed"))
            p.seed = read_value<std::uint64_t>(r["seed"], "representations.seed");
    }
    if (j.contains("illumination")) {
        auto const &il = j["illumination"];
        require_object(il, "illumination");
        reject_unknown(il, "illumination.", {"normalize", "estimator"});
        if (il.contains("normalize"))
            p.normalize_illumination = read_value<bool>(il["normalize"], "illumination.normalize");
        if (il.contains("estimator"))
            p.illuminant = parse_illuminant(read_value<std::string>(il["estimator"], "illumination.estimator"));
    }
    if (j.contains("initializer")) {
        auto const &in = j["initializer"];
        require_object(in, "initializer");
        reject_unknown(in, "initializer.",
                       {"window_radius", "guard_threshold", "change_tolerance", "max_iterations", "saturation_level"});
        if (in.contains("window_radius"))
            p.init.window_radius = read_value<Index>(in["window_radius"], "initializer.window_radius");
        if (in.contains("guard_threshold"))
            p.init.guard_threshold = read_value<double>(in["guard_threshold"], "initializer.guard_threshold");
        if (in.contains("change_tolerance"))
            p.init.change_tolerance = read_value<double>(in["change_tolerance"], "initializer.change_tolerance");
        if (in.contains("max_iterations"))
            p.init.max_iterations = read_value<int>(in["max_iterations"], "initializer.max_iterations");
        if (in.contains("saturation_level"))
            p.init.saturation_level = read_value<double>(in["saturation_level"], "initializer.saturation_level");
    }
    if (j.contains("solver"))
        apply_json(p.solver, j["solver"]);
    if (j.contains("output")) {
        auto const &o = j["output"];
        require_object(o, "output");
        reject_unknown(o, "output.", {"dir", "png_bit_depth"});
        if (o.contains("dir"))
            c.output_dir = read_value<std::string>(o["dir"], "output.dir");
        if (o.contains("png_bit_depth"))
            c.png_bit_depth = read_value<int>(o["png_bit_depth"], "output.png_bit_depth");
    }
    if (j.contains("metrics")) {
        auto const &m = j["metrics"];
        require_object(m, "metrics");
        reject_unknown(m, "metrics.", {"enabled", "ground_truth", "saturation_mask"});
        if (m.contains("enabled"))
            c.metrics = read_value<bool>(m["enabled"], "metrics.enabled");
        if (m.contains("ground_truth"))
            c.ground_truth = read_value<std::string>(m["ground_truth"], "metrics.ground_truth");
        if (m.contains("saturation_mask"))
            c.saturation_mask = read_value<std::string>(m["saturation_mask"], "metrics.saturation_mask");
    }
}

inline Json read_json_file(std::filesystem::path const &path)
{
    std::ifstream is(path);
    if (!is)
        throw UsageError(path.string() + ": cannot open");
    try {
        return Json::parse(is);
    } catch (nlohmann::json::parse_error const &e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

namespace detail {

inline Vec3 read_vec3(Json const &j, std::string const &key)
{
    return read_value<Vec3>(j, key);
}

inline Image scene_albedo(Json const &a, Index h, Index w)
{
    require_object(a, "albedo");
    auto const type = read_value<std::string>(a.value("type", Json("uniform")), "albedo.type");
    if (type == "uniform") {
        reject_unknown(a, "albedo.", {"type", "color"});
        return scenes::uniform_albedo(h, w, read_vec3(a.at("color"), "albedo.color"));
    }
    if (type == "stripes") {
        reject_unknown(a, "albedo.", {"type", "colors", "period"});
        auto const colors = read_value<std::vector<Vec3>>(a.at("colors"), "albedo.colors");
        auto const period = read_value<Index>(a.at("period"), "albedo.period");
        if (colors.empty() || period < 1)
            throw UsageError("config: stripes need at least one colour and a positive period");
        return scenes::striped_albedo(h, w, colors, period);
    }
    if (type == "disc") {
        reject_unknown(a, "albedo.", {"type", "outer", "inner", "center", "radius"});
        auto const center = read_value<std::array<double, 2>>(a.at("center"), "albedo.center");
        return scenes::disc_albedo(h, w, read_vec3(a.at("outer"), "albedo.outer"), read_vec3(a.at("inner"), "albedo.inner"),
                                   center[0], center[1], read_value<double>(a.at("radius"), "albedo.radius"));
    }
    throw UsageError("config: unknown albedo type '" + type + "'");
}

} // namespace detail

/// Builds a scene from a declarative description, or picks a suite scene when "suite" names one.
/// Lengths are in pixels, centres are [row, column], angles in degrees.
inline SceneSpec scene_from_json(Json const &j)
{
    using namespace detail;
    require_object(j, "scene");
    try {
        if (j.contains("suite")) {
            reject_unknown(j, "", {"suite", "size"});
            auto const name = read_value<std::string>(j["suite"], "suite");
            auto const size = read_value<Index>(j.value("size", Json(128)), "size");
            if (size < 4)
                throw UsageError("config: suite size must be >= 4");
            for (auto &s : suite_specs(size))
                if (s.name == name)
                    return s;
            throw UsageError("config: no suite scene named '" + name + "'");
        }
        reject_unknown(j, "", {"name", "height", "width", "surfaces", "coverage", "albedo", "light_dir", "light_color",
                               "shininess", "k_d", "k_s", "polarization", "phase", "phi0_deg"});
        SceneSpec s;
        s.name = read_value<std::string>(j.value("name", Json("scene")), "name");
        auto const h = read_value<Index>(j.at("height"), "height");
        auto const w = read_value<Index>(j.at("width"), "width");
        if (h < 1 || w < 1)
            throw UsageError("config: scene dimensions must be positive");
        s.depth = Image(h, w, 1);
        for (auto const &surf : j.value("surfaces", Json::array())) {
            require_object(surf, "surfaces[]");
            auto const type = read_value<std::string>(surf.at("type"), "surfaces[].type");
            auto const c = read_value<std::array<double, 2>>(surf.at("center"), "surfaces[].center");
            if (type == "sphere") {
                reject_unknown(surf, "surfaces[].", {"type", "center", "radius"});
                scenes::add_sphere(s.depth, c[0], c[1], read_value<double>(surf.at("radius"), "surfaces[].radius"));
            } else if (type == "blob") {
                reject_unknown(surf, "surfaces[].", {"type", "center", "sigma", "height"});
                scenes::add_blob(s.depth, c[0], c[1], read_value<double>(surf.at("sigma"), "surfaces[].sigma"),
                                 read_value<double>(surf.at("height"), "surfaces[].height"));
            } else {
                throw UsageError("config: unknown surface type '" + type + "'");
            }
        }
        if (j.contains("coverage"))
            s.coverage = scenes::disc_coverage(
                h, w, read_value<std::vector<std::array<double, 3>>>(j["coverage"], "coverage"));
        s.albedo = scene_albedo(j.at("albedo"), h, w);
        if (j.contains("light_dir"))
            s.light_dir = normalized(read_vec3(j["light_dir"], "light_dir"));
        if (j.contains("light_color"))
            s.light_color = read_vec3(j["light_color"], "light_color");
        s.shininess = read_value<double>(j.value("shininess", Json(s.shininess)), "shininess");
        s.k_d = read_value<double>(j.value("k_d", Json(s.k_d)), "k_d");
        s.k_s = read_value<double>(j.value("k_s", Json(s.k_s)), "k_s");
        s.polarization = read_value<double>(j.value("polarization", Json(s.polarization)), "polarization");
        auto const phase = read_value<std::string>(j.value("phase", Json("geometry")), "phase");
        if (phase == "geometry")
            s.phase_mode = PhaseMode::from_geometry;
        else if (phase == "constant")
            s.phase_mode = PhaseMode::constant;
        else
            throw UsageError("config: phase must be geometry or constant");
        s.phi0 = read_value<double>(j.value("phi0_deg", Json(0.0)), "phi0_deg") * std::numbers::pi / 180.0;
        return s;
    } catch (nlohmann::json::out_of_range const &e) {
        throw UsageError(std::string("config: missing scene field: ") + e.what());
    }
}

} // namespace polarsep
