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

#include "config.hpp"
#include "error.hpp"
#include "image_io.hpp"
#include "metrics.hpp"
#include "mosaic.hpp"
#include "pipeline.hpp"
#include "synth.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace polarsep {

namespace fs = std::filesystem;

/// Process exit codes of the command line tool.
enum ExitCode : int
{
    exit_ok = 0,
    exit_usage = 2,
    exit_data = 3,
    exit_not_converged = 4,
};

inline Json to_json(MetricReport const &m)
{
    Json j{{"psnr", m.psnr}, {"ssim", m.ssim}};
    j["psnr_unsaturated"] = detail::optional_number(m.psnr_unsaturated);
    j["ssim_unsaturated"] = detail::optional_number(m.ssim_unsaturated);
    return j;
}

namespace detail {

inline void write_text(fs::path const &path, std::string const &text)
{
    std::ofstream os(path, std::ios::binary);
    os << text;
    if (!os)
        throw DataError(path.string() + ": write failed");
}

inline Image load_rgb(std::string const &path)
{
    Image img = to_rgb(read_image(path));
    if (!img.allFinite())
        throw DataError(path + ": contains non-finite pixels");
    for (double v : img.data())
        if (v < 0.0)
            throw DataError(path + ": contains negative intensities");
    return img;
}

/// Fixed-point rendering so tables are byte-stable across runs.
inline std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace detail

inline PolarStack load_input(PipelineConfig const &cfg)
{
    if (cfg.input_mode == InputMode::mosaic)
        return demosaic(detail::load_rgb(cfg.inputs[0]), cfg.mosaic_layout);
    std::array<Image, kAngles> ims;
    for (int a = 0; a < kAngles; ++a) {
        ims[a] = detail::load_rgb(cfg.inputs[a]);
        if (!ims[a].sameShape(ims[0]))
            throw DataError(cfg.inputs[a] + ": dimensions " + std::to_string(ims[a].height()) + "x" +
                            std::to_string(ims[a].width()) + " differ from " + cfg.inputs[0]);
    }
    return PolarStack(std::move(ims));
}

struct RunReport
{
    SeparationOutput output;
    std::optional<MetricReport> metrics;
    int exit_code = exit_ok;
};

inline Json summary_json(SeparationOutput const &out)
{
    auto const &r = out.result;
    return Json{{"iterations", r.iterations},
                {"converged", r.converged},
                {"lambda", r.lambda},
                {"phase_projections", r.phase_projections},
                {"final_error", r.trace.empty() ? 0.0 : r.trace.back().error},
                {"illumination", {{"gamma", out.illumination.gamma}, {"degenerate", out.illumination.degenerate}}}};
}

/// Separates an already loaded stack and writes every artifact into cfg.output_dir.
inline RunReport run_separation(PolarStack const &input, PipelineConfig const &cfg, Image const *truth = nullptr,
                                Image const *saturated = nullptr)
{
    cfg.separation.validate();
    fs::path const dir = cfg.output_dir;
    fs::create_directories(dir);
    detail::write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");

    RunReport rep;
    rep.output = separate(input, cfg.separation);
    auto const &out = rep.output;

    write_png(dir / "diffuse.png", out.diffuse, cfg.png_bit_depth);
    write_png(dir / "specular.png", out.specular, cfg.png_bit_depth);
    write_pfm(dir / "diffuse.pfm", out.diffuse);
    write_pfm(dir / "specular.pfm", out.specular);
    write_pfm(dir / "specular_sparse.pfm", out.specular_sparse);
    {
        std::ofstream os(dir / "convergence.csv", std::ios::binary);
        write_trace_csv(os, out.result.trace);
        if (!os)
            throw DataError((dir / "convergence.csv").string() + ": write failed");
    }
    detail::write_text(dir / "summary.json", summary_json(out).dump(2) + "\n");

    if (truth && cfg.metrics) {
        if (truth->height() != out.diffuse.height() || truth->width() != out.diffuse.width())
            throw DataError("ground truth dimensions differ from the input");
        rep.metrics = evaluate(out.diffuse, *truth, saturated);
        detail::write_text(dir / "metrics.json", to_json(*rep.metrics).dump(2) + "\n");
        write_pfm(dir / "ssim_map.pfm", rep.metrics->ssim_map);
    }
    rep.exit_code = out.result.converged ? exit_ok : exit_not_converged;
    return rep;
}

/// Loads the inputs named by the config, separates them and writes the artifacts.
inline RunReport run_pipeline(PipelineConfig const &cfg)
{
    cfg.validate();
    PolarStack const input = load_input(cfg);
    std::optional<Image> truth, mask;
    if (!cfg.ground_truth.empty() && cfg.metrics) {
        truth = detail::load_rgb(cfg.ground_truth);
        if (!cfg.saturation_mask.empty()) {
            Image const m = read_image(cfg.saturation_mask);
            mask = Image(m.height(), m.width(), 1);
            for (Index i = 0; i < m.pixels(); ++i)
                mask->data()[static_cast<std::size_t>(i)] = m.data()[static_cast<std::size_t>(i)] > 0.5 ? 1.0 : 0.0;
            if (m.height() != input.height() || m.width() != input.width())
                throw DataError(cfg.saturation_mask + ": dimensions differ from the input");
        }
    }
    return run_separation(input, cfg, truth ? &*truth : nullptr, mask ? &*mask : nullptr);
}

struct SuiteRow
{
    std::string scene;
    std::string mode;
    MetricReport metrics;
    MetricReport baseline; ///< mean of the four angles against the same reference
    int iterations = 0;
    bool converged = false;
    std::string error; ///< non-empty when this run failed
};

struct SuiteOptions
{
    std::string output_dir = "suite";
    Index size = 128;
    SeparationParams params;
    std::vector<SolverMode> modes{SolverMode::full, SolverMode::no_phase, SolverMode::plain};
    std::vector<std::string> scenes; ///< empty: all scenes
    bool write_images = false;
};

inline std::string suite_markdown(std::vector<SuiteRow> const &rows)
{
    using detail::fixed;
    std::string s = "| scene | mode | PSNR | SSIM | PSNR unsat. | SSIM unsat. | mean PSNR | mean SSIM | iterations |\n"
                    "|---|---|---|---|---|---|---|---|---|\n";
    auto opt = [](std::optional<double> const &v, int d) { return v ? fixed(*v, d) : std::string("-"); };
    for (auto const &r : rows) {
        if (!r.error.empty()) {
            s += "| " + r.scene + " | " + r.mode + " | error: " + r.error + " | | | | | | |\n";
            continue;
        }
        s += "| " + r.scene + " | " + r.mode + " | " + fixed(r.metrics.psnr, 2) + " | " + fixed(r.metrics.ssim, 4) +
             " | " + opt(r.metrics.psnr_unsaturated, 2) + " | " + opt(r.metrics.ssim_unsaturated, 4) + " | " +
             fixed(r.baseline.psnr, 2) + " | " + fixed(r.baseline.ssim, 4) + " | " + std::to_string(r.iterations) +
             (r.converged ? "" : "*") + " |\n";
    }
    return s;
}

inline std::string suite_csv(std::vector<SuiteRow> const &rows)
{
    using detail::fixed;
    std::string s = "scene,mode,psnr,ssim,psnr_unsaturated,ssim_unsaturated,mean_psnr,mean_ssim,iterations,converged,error\n";
    auto opt = [](std::optional<double> const &v) { return v ? fixed(*v, 10) : std::string(); };
    for (auto const &r : rows)
        s += r.scene + "," + r.mode + "," + fixed(r.metrics.psnr, 10) + "," + fixed(r.metrics.ssim, 10) + "," +
             opt(r.metrics.psnr_unsaturated) + "," + opt(r.metrics.ssim_unsaturated) + "," +
             fixed(r.baseline.psnr, 10) + "," + fixed(r.baseline.ssim, 10) + "," + std::to_string(r.iterations) + "," +
             (r.converged ? "true" : "false") + "," + (r.error.empty() ? "" : "\"" + r.error + "\"") + "\n";
    return s;
}

/// Renders the scene suite and separates every scene in every requested mode. A failing run is
/// recorded in its row and the suite continues. Writes suite.md, suite.csv and suite.jsonl.
inline std::vector<SuiteRow> run_suite(SuiteOptions const &opt, std::ostream *log = nullptr)
{
    opt.params.validate();
    if (opt.size < 4)
        throw UsageError("suite: size must be >= 4");
    auto const specs = suite_specs(opt.size);
    for (auto const &name : opt.scenes)
        if (std::none_of(specs.begin(), specs.end(), [&](SceneSpec const &s) { return s.name == name; }))
            throw UsageError("suite: unknown scene '" + name + "'");
    fs::path const dir = opt.output_dir;
    fs::create_directories(dir);

    std::vector<SuiteRow> rows;
    std::string jsonl;
    for (auto const &spec : specs) {
        if (!opt.scenes.empty() && std::find(opt.scenes.begin(), opt.scenes.end(), spec.name) == opt.scenes.end())
            continue;
        GroundTruthScene const gt = render(spec);
        MetricReport const baseline = evaluate(gt.stack.mean(), gt.diffuse_gt, &gt.saturated);
        for (SolverMode mode : opt.modes) {
            SuiteRow row;
            row.scene = spec.name;
            row.mode = to_string(mode);
            row.baseline = baseline;
            if (log)
                *log << "suite: " << row.scene << " / " << row.mode << std::endl;
            try {
                SeparationParams prm = opt.params;
                prm.solver.mode = mode;
                SeparationOutput const out = separate(gt.stack, prm);
                row.metrics = evaluate(out.diffuse, gt.diffuse_gt, &gt.saturated);
                row.iterations = out.result.iterations;
                row.converged = out.result.converged;
                if (opt.write_images) {
                    fs::path const sub = dir / spec.name;
                    fs::create_directories(sub);
                    write_png(sub / ("diffuse_" + row.mode + ".png"), out.diffuse);
                    write_png(sub / "diffuse_gt.png", gt.diffuse_gt);
                    write_png(sub / "mean.png", gt.stack.mean());
                }
            } catch (std::exception const &e) {
                row.error = e.what();
            }
            Json j{{"scene", row.scene}, {"mode", row.mode}};
            if (row.error.empty()) {
                j["metrics"] = to_json(row.metrics);
                j["iterations"] = row.iterations;
                j["converged"] = row.converged;
            } else {
                j["error"] = row.error;
            }
            j["baseline"] = to_json(row.baseline);
            jsonl += j.dump() + "\n";
            rows.push_back(std::move(row));
        }
    }
    detail::write_text(dir / "suite.md", suite_markdown(rows));
    detail::write_text(dir / "suite.csv", suite_csv(rows));
    detail::write_text(dir / "suite.jsonl", jsonl);
    return rows;
}

} // namespace polarsep
