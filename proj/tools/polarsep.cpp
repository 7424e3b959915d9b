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
#include <polarsep/config.hpp>
#include <polarsep/image_io.hpp>
#include <polarsep/metrics.hpp>
#include <polarsep/mosaic.hpp>
#include <polarsep/run.hpp>
#include <polarsep/synth.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace polarsep;

namespace {

struct SolverFlags
{
    std::string mode = "full";
    std::optional<double> lambda, gamma0, gamma_max, mu0;
    std::string lambda_rule = "tensor";
    std::string l_step = "lagrangian";
    SolverConfig base;
};

void add_separation_flags(CLI::App &cmd, SeparationParams &p, SolverFlags &s, std::string &illuminant, bool &no_normalize)
{
    cmd.add_option("--block-size", p.block_size, "candidate block edge in pixels")->capture_default_str();
    cmd.add_option("--n4", p.n4, "representations per pixel")->capture_default_str();
    cmd.add_option("--threshold", p.threshold, "chromaticity similarity threshold T")->capture_default_str();
    cmd.add_option("--seed", p.seed, "candidate sampling seed")->capture_default_str();
    cmd.add_option("--illuminant", illuminant, "illuminant estimator: polarized or max-rgb")->capture_default_str();
    cmd.add_flag("--no-normalize", no_normalize, "skip illumination normalization");
    cmd.add_option("--mode", s.mode, "full, no-phase or plain")->capture_default_str();
    cmd.add_option("--lambda", s.lambda, "sparsity weight (default: from --lambda-rule)");
    cmd.add_option("--lambda-rule", s.lambda_rule, "default lambda: tensor or image")->capture_default_str();
    cmd.add_option("--gamma0", s.gamma0, "initial phase weight (default 0.1 lambda)");
    cmd.add_option("--gamma-growth", p.solver.gamma_growth, "phase weight growth per iteration")->capture_default_str();
    cmd.add_option("--gamma-max", s.gamma_max, "phase weight cap (default 10 lambda)");
    cmd.add_option("--mu0", s.mu0, "initial penalty (default 1.25 / spectral norm)");
    cmd.add_option("--rho", p.solver.rho, "penalty growth")->capture_default_str();
    cmd.add_option("--mu-max", p.solver.mu_max, "penalty cap")->capture_default_str();
    cmd.add_option("--tol", p.solver.tol, "relative residual tolerance")->capture_default_str();
    cmd.add_option("--max-iters", p.solver.max_iters, "iteration limit")->capture_default_str();
    cmd.add_option("--alpha", p.solver.alpha, "gradient weight exponent scale")->capture_default_str();
    cmd.add_option("--beta", p.solver.beta, "gradient weight exponent power")->capture_default_str();
    cmd.add_option("--l-step", s.l_step, "low-rank update weighting: lagrangian or printed")->capture_default_str();
}

void finish_separation_flags(SeparationParams &p, SolverFlags const &s, std::string const &illuminant, bool no_normalize)
{
    p.solver.mode = parse_mode(s.mode);
    p.solver.lambda = s.lambda;
    p.solver.lambda_rule = parse_lambda_rule(s.lambda_rule);
    p.solver.gamma0 = s.gamma0;
    p.solver.gamma_max = s.gamma_max;
    p.solver.mu0 = s.mu0;
    p.solver.l_step = detail::parse_l_step(s.l_step);
    p.illuminant = detail::parse_illuminant(illuminant);
    p.normalize_illumination = !no_normalize;
}

std::array<int, 4> parse_layout(std::string const &text)
{
    std::array<int, 4> out{};
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        std::size_t const end = text.find(',', pos);
        if ((i < 3) != (end != std::string::npos))
            throw UsageError("--layout expects four comma-separated angles");
        try {
            out[static_cast<std::size_t>(i)] = std::stoi(text.substr(pos, end - pos));
        } catch (std::exception const &) {
            throw UsageError("--layout expects four comma-separated angles");
        }
        pos = end + 1;
    }
    return out;
}

void write_scene(GroundTruthScene const &gt, std::filesystem::path const &dir, int bits, bool mosaic)
{
    std::filesystem::create_directories(dir);
    char const *names[kAngles] = {"000", "045", "090", "135"};
    for (int a = 0; a < kAngles; ++a) {
        write_png(dir / (std::string("angle_") + names[a] + ".png"), gt.stack[a], bits);
        write_pfm(dir / (std::string("angle_") + names[a] + ".pfm"), gt.stack[a]);
    }
    if (mosaic)
        write_png(dir / "mosaic.png", pack_mosaic(gt.stack), bits);
    write_png(dir / "mean.png", gt.stack.mean(), bits);
    write_png(dir / "diffuse_gt.png", gt.diffuse_gt, bits);
    write_pfm(dir / "diffuse_gt.pfm", gt.diffuse_gt);
    write_pfm(dir / "specular_gt.pfm", gt.specular_gt);
    write_png(dir / "saturated.png", gt.saturated);
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Polarimetric specular and diffuse separation"};
    app.require_subcommand(1);

    // decompose
    PipelineConfig cfg;
    SolverFlags dsolver;
    std::string dillum = "polarized", layout = "90,45,135,0", config_path, mosaic_path;
    std::vector<std::string> inputs;
    bool dnonorm = false, no_metrics = false;
    auto *decompose = app.add_subcommand("decompose", "separate one polarization capture");
    decompose->add_option("-i,--input", inputs, "four images at 0, 45, 90 and 135 degrees")->expected(4);
    decompose->add_option("--mosaic", mosaic_path, "a single 2x2 polarization mosaic");
    decompose->add_option("--layout", layout, "mosaic angles, row-major")->capture_default_str();
    decompose->add_option("-o,--out", cfg.output_dir, "output directory")->capture_default_str();
    decompose->add_option("--png-bits", cfg.png_bit_depth, "PNG bit depth (8 or 16)")->capture_default_str();
    decompose->add_option("--ground-truth", cfg.ground_truth, "diffuse reference for metrics.json");
    decompose->add_option("--saturation-mask", cfg.saturation_mask, "mask of saturated pixels for masked metrics");
    decompose->add_flag("--no-metrics", no_metrics, "skip metrics even with a reference");
    decompose->add_option("-c,--config", config_path, "JSON config; its values override flags");
    add_separation_flags(*decompose, cfg.separation, dsolver, dillum, dnonorm);

    // render
    std::string scene_path, suite_scene, render_out = "scene";
    Index render_size = 128;
    int render_bits = 16;
    bool render_mosaic = false;
    auto *render_cmd = app.add_subcommand("render", "render a synthetic scene with ground truth");
    auto *scene_opt = render_cmd->add_option("--scene", scene_path, "JSON scene description");
    render_cmd->add_option("--suite-scene", suite_scene, "name of a built-in suite scene")->excludes(scene_opt);
    render_cmd->add_option("--size", render_size, "suite scene size")->capture_default_str();
    render_cmd->add_option("-o,--out", render_out, "output directory")->capture_default_str();
    render_cmd->add_option("--png-bits", render_bits, "PNG bit depth (8 or 16)")->capture_default_str();
    render_cmd->add_flag("--mosaic", render_mosaic, "also write a packed 2x2 mosaic");

    // suite
    SuiteOptions suite;
    SolverFlags ssolver;
    std::string sillum = "polarized", suite_config;
    std::vector<std::string> suite_modes;
    bool snonorm = false;
    auto *suite_cmd = app.add_subcommand("suite", "run every mode on the synthetic scene suite");
    suite_cmd->add_option("-o,--out", suite.output_dir, "output directory")->capture_default_str();
    suite_cmd->add_option("--size", suite.size, "scene size in pixels")->capture_default_str();
    suite_cmd->add_option("--scenes", suite.scenes, "restrict to these scene names");
    suite_cmd->add_option("--modes", suite_modes, "restrict to these modes");
    suite_cmd->add_flag("--images", suite.write_images, "write diffuse images per scene and mode");
    suite_cmd->add_option("-c,--config", suite_config, "JSON config; representations, illumination, initializer and solver apply");
    add_separation_flags(*suite_cmd, suite.params, ssolver, sillum, snonorm);

    // metrics
    std::string estimate_path, truth_path, mask_path;
    bool per_channel = false;
    auto *metrics_cmd = app.add_subcommand("metrics", "PSNR and SSIM of an estimate against a reference");
    metrics_cmd->add_option("estimate", estimate_path, "estimated image")->required();
    metrics_cmd->add_option("reference", truth_path, "reference image")->required();
    metrics_cmd->add_option("--mask", mask_path, "pixels > 0.5 are excluded from the masked variants");
    metrics_cmd->add_flag("--per-channel", per_channel, "SSIM as the mean over colour channels");

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const &e) {
        int const code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*decompose) {
            finish_separation_flags(cfg.separation, dsolver, dillum, dnonorm);
            cfg.metrics = !no_metrics;
            cfg.mosaic_layout.degrees = parse_layout(layout);
            if (!mosaic_path.empty() && !inputs.empty())
                throw UsageError("give either --input or --mosaic, not both");
            if (!mosaic_path.empty()) {
                cfg.input_mode = InputMode::mosaic;
                cfg.inputs = {mosaic_path};
            } else {
                cfg.inputs = inputs;
            }
            if (!config_path.empty())
                apply_json(cfg, read_json_file(config_path));
            RunReport const rep = run_pipeline(cfg);
            auto const &r = rep.output.result;
            std::cout << "iterations " << r.iterations << ", converged " << (r.converged ? "yes" : "no") << ", lambda "
                      << r.lambda << "\n";
            if (rep.metrics)
                std::cout << "psnr " << rep.metrics->psnr << " dB, ssim " << rep.metrics->ssim << "\n";
            if (!r.converged)
                std::cerr << "warning: solver stopped at max_iters without reaching tol\n";
            return rep.exit_code;
        }
        if (*render_cmd) {
            if (render_bits != 8 && render_bits != 16)
                throw UsageError("--png-bits must be 8 or 16");
            SceneSpec spec;
            if (!scene_path.empty())
                spec = scene_from_json(read_json_file(scene_path));
            else if (!suite_scene.empty())
                spec = scene_from_json(Json{{"suite", suite_scene}, {"size", render_size}});
            else
                throw UsageError("render needs --scene or --suite-scene");
            GroundTruthScene const gt = render(spec);
            write_scene(gt, render_out, render_bits, render_mosaic);
            std::cout << gt.name << ": " << gt.stack.height() << "x" << gt.stack.width() << ", saturated fraction "
                      << gt.saturated_fraction() << "\n";
            return exit_ok;
        }
        if (*suite_cmd) {
            finish_separation_flags(suite.params, ssolver, sillum, snonorm);
            if (!suite_config.empty()) {
                PipelineConfig tmp;
                tmp.separation = suite.params;
                Json j = read_json_file(suite_config);
                for (char const *k : {"input", "output", "metrics"})
                    j.erase(k);
                apply_json(tmp, j);
                suite.params = tmp.separation;
            }
            if (!suite_modes.empty()) {
                suite.modes.clear();
                for (auto const &m : suite_modes)
                    suite.modes.push_back(parse_mode(m));
            }
            auto const rows = run_suite(suite, &std::cerr);
            std::cout << suite_markdown(rows);
            for (auto const &r : rows)
                if (!r.error.empty())
                    return exit_data;
            return exit_ok;
        }
        if (*metrics_cmd) {
            Image const est = to_rgb(read_image(estimate_path));
            Image const ref = to_rgb(read_image(truth_path));
            if (!est.sameShape(ref))
                throw DataError(estimate_path + " and " + truth_path + " differ in size");
            std::optional<Image> mask;
            if (!mask_path.empty()) {
                Image const m = read_image(mask_path);
                mask = Image(m.height(), m.width(), 1);
                for (std::size_t i = 0; i < mask->data().size(); ++i)
                    mask->data()[i] = m.data()[i] > 0.5 ? 1.0 : 0.0;
            }
            SsimOptions opts;
            if (per_channel)
                opts.color = SsimColor::channel_mean;
            MetricReport const rep = evaluate(est, ref, mask ? &*mask : nullptr, opts);
            std::cout << to_json(rep).dump(2) << "\n";
            return exit_ok;
        }
    } catch (UsageError const &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (std::exception const &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_data;
    }
    return exit_usage;
}
