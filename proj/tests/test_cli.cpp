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
#include <polarsep/mosaic.hpp>
#include <polarsep/run.hpp>
#include <polarsep/synth.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

using namespace polarsep;
namespace fs = std::filesystem;

namespace {

class TempDir
{
  public:
    TempDir()
      : path_{fs::temp_directory_path() /
              ("polarsep-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++))}
    {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    TempDir(TempDir const &) = delete;
    TempDir &operator=(TempDir const &) = delete;

    fs::path const &path() const { return path_; }
    fs::path operator/(std::string const &name) const { return path_ / name; }

  private:
    static int &counter()
    {
        static int n = 0;
        return n;
    }
    fs::path path_;
};

std::string slurp(fs::path const &p)
{
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

Image random_image(Index h, Index w, Index ch, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(h, w, ch);
    for (auto &v : img.data())
        v = u(rng);
    return img;
}

// Writes the four angles as PFM files and returns a config reading them.
PipelineConfig stage(GroundTruthScene const &gt, TempDir const &dir)
{
    PipelineConfig cfg;
    char const *names[kAngles] = {"a000.pfm", "a045.pfm", "a090.pfm", "a135.pfm"};
    for (int a = 0; a < kAngles; ++a) {
        write_pfm(dir / names[a], gt.stack[a]);
        cfg.inputs.push_back((dir / names[a]).string());
    }
    write_pfm(dir / "truth.pfm", gt.diffuse_gt);
    cfg.ground_truth = (dir / "truth.pfm").string();
    cfg.output_dir = (dir / "out").string();
    cfg.separation.block_size = 8;
    cfg.separation.n4 = 4;
    return cfg;
}

Json read_json(fs::path const &p)
{
    return read_json_file(p);
}

int run_cli(std::string const &args)
{
    std::string const cmd = std::string(POLARSEP_CLI) + " " + args + " >/dev/null 2>&1";
    int const status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Demosaic, SuperpixelLayout)
{
    Image m(2, 2, 1);
    m(0, 0, 0) = 0.1;
    m(0, 0, 1) = 0.2;
    m(0, 1, 0) = 0.3;
    m(0, 1, 1) = 0.4;
    auto const s = demosaic(m);
    ASSERT_EQ(s.height(), 1);
    ASSERT_EQ(s.width(), 1);
    std::array<double, 4> const expect{0.4, 0.2, 0.1, 0.3}; // 0, 45, 90, 135 degrees
    for (int a = 0; a < 4; ++a)
        for (int k = 0; k < 3; ++k)
            EXPECT_EQ(s[a](k, 0, 0), expect[a]);

    MosaicLayout custom;
    custom.degrees = {0, 45, 135, 90};
    auto const t = demosaic(m, custom);
    EXPECT_EQ(t[0](0, 0, 0), 0.1);
    EXPECT_EQ(t[3](0, 0, 0), 0.3);
    EXPECT_EQ(t[2](0, 0, 0), 0.4);
}

TEST(Demosaic, ConstantAndErrors)
{
    auto const s = demosaic(Image(6, 8, 3, 0.25));
    for (int a = 0; a < 4; ++a)
        EXPECT_EQ(s[a], Image(3, 4, 3, 0.25));
    EXPECT_THROW(demosaic(Image(5, 8, 1)), DataError);
    EXPECT_THROW(demosaic(Image(4, 7, 1)), DataError);
    MosaicLayout bad;
    bad.degrees = {0, 45, 45, 90};
    EXPECT_THROW(demosaic(Image(4, 4, 1), bad), UsageError);
}

TEST(Demosaic, InvertsPacking)
{
    std::mt19937_64 rng(1);
    PolarStack s(5, 7);
    for (auto &im : s.images)
        im = random_image(5, 7, 3, rng);
    for (auto layout : {std::array<int, 4>{90, 45, 135, 0}, std::array<int, 4>{0, 135, 45, 90}}) {
        MosaicLayout lay;
        lay.degrees = layout;
        Image const m = pack_mosaic(s, lay);
        EXPECT_EQ(m.height(), 10);
        EXPECT_EQ(m.width(), 14);
        EXPECT_EQ(demosaic(m, lay), s);
    }
}

TEST(ImageIo, PngRoundTrips)
{
    TempDir dir;
    Image img(3, 5, 3);
    for (std::size_t i = 0; i < img.data().size(); ++i)
        img.data()[i] = static_cast<double>((i * 37) % 256) / 255.0;
    write_png(dir / "a.png", img);
    EXPECT_EQ(read_png(dir / "a.png"), img);

    Image wide(4, 2, 1);
    for (std::size_t i = 0; i < wide.data().size(); ++i)
        wide.data()[i] = static_cast<double>(i * 8191 % 65536) / 65535.0;
    write_png(dir / "b.png", wide, 16);
    EXPECT_EQ(read_png(dir / "b.png"), wide);

    Image wild(1, 3, 1);
    wild.data() = {-0.5, 2.0, std::nan("")};
    write_png(dir / "c.png", wild);
    Image const back = read_png(dir / "c.png");
    EXPECT_EQ(back.data(), (std::vector<double>{0.0, 1.0, 0.0}));
    EXPECT_THROW(write_png(dir / "d.png", img, 12), UsageError);
}

TEST(ImageIo, PfmRoundTrips)
{
    TempDir dir;
    std::mt19937_64 rng(2);
    for (Index ch : {1, 3}) {
        Image img = random_image(4, 6, ch, rng);
        for (auto &v : img.data())
            v = static_cast<double>(static_cast<float>(v));
        write_pfm(dir / "x.pfm", img);
        EXPECT_EQ(read_pfm(dir / "x.pfm"), img);
        EXPECT_EQ(read_image(dir / "x.pfm"), img);
    }
    std::string const bytes = slurp(dir / "x.pfm");
    EXPECT_EQ(bytes.substr(0, 12), std::string("PF\n6 4\n-1.0\n"));
}

TEST(ImageIo, ErrorsNameTheFile)
{
    TempDir dir;
    try {
        read_png(dir / "missing.png");
        FAIL();
    } catch (DataError const &e) {
        EXPECT_NE(std::string(e.what()).find("missing.png"), std::string::npos);
    }
    std::ofstream(dir / "junk.png") << "not an image";
    EXPECT_THROW(read_png(dir / "junk.png"), DataError);
    std::ofstream(dir / "junk.pfm") << "PF\n2 2\n-1.0\nxx";
    EXPECT_THROW(read_pfm(dir / "junk.pfm"), DataError);
}

TEST(Config, JsonRoundTrip)
{
    PipelineConfig c;
    c.input_mode = InputMode::mosaic;
    c.inputs = {"m.png"};
    c.mosaic_layout.degrees = {0, 45, 90, 135};
    c.separation.block_size = 12;
    c.separation.n4 = 5;
    c.separation.seed = 99;
    c.separation.illuminant = IlluminantEstimator::max_rgb;
    c.separation.init.window_radius = 2;
    c.separation.solver.lambda = 0.01;
    c.separation.solver.mode = SolverMode::no_phase;
    c.separation.solver.l_step = LStepForm::printed;
    c.separation.solver.lambda_rule = LambdaRule::image;
    c.output_dir = "elsewhere";
    c.png_bit_depth = 16;
    c.metrics = false;
    Json const j = to_json(c);
    PipelineConfig d;
    apply_json(d, j);
    EXPECT_EQ(to_json(d), j);
    EXPECT_EQ(d.separation.solver.lambda, 0.01);
    EXPECT_FALSE(d.separation.solver.gamma0.has_value());

    PipelineConfig e;
    apply_json(e, Json::parse(R"({"solver": {"lambda": "auto", "mode": "plain"}})"));
    EXPECT_FALSE(e.separation.solver.lambda.has_value());
    EXPECT_EQ(e.separation.solver.mode, SolverMode::plain);
    EXPECT_EQ(e.separation.n4, 8);
}

TEST(Config, RejectsUnknownAndInvalid)
{
    PipelineConfig c;
    EXPECT_THROW(apply_json(c, Json::parse(R"({"solvr": {}})")), UsageError);
    EXPECT_THROW(apply_json(c, Json::parse(R"({"solver": {"lamda": 1}})")), UsageError);
    EXPECT_THROW(apply_json(c, Json::parse(R"({"solver": {"mode": "fast"}})")), UsageError);
    EXPECT_THROW(apply_json(c, Json::parse(R"({"representations": {"n4": "x"}})")), UsageError);
    PipelineConfig v;
    EXPECT_THROW(v.validate(), UsageError);
    v.inputs = {"a", "b", "c", "d"};
    v.validate();
    v.separation.n4 = 0;
    EXPECT_THROW(v.validate(), UsageError);
}

TEST(Config, SceneDescriptions)
{
    auto const suite = scene_from_json(Json::parse(R"({"suite": "sphere-weak", "size": 32})"));
    EXPECT_EQ(render(suite).stack, render(suite_specs(32)[0]).stack);
    auto const s = scene_from_json(Json::parse(R"({
        "name": "custom", "height": 20, "width": 24,
        "surfaces": [{"type": "sphere", "center": [10, 12], "radius": 8}],
        "albedo": {"type": "uniform", "color": [0.5, 0.4, 0.3]},
        "k_s": 0.3, "polarization": 0.5, "phase": "constant", "phi0_deg": 30})"));
    EXPECT_EQ(s.depth.height(), 20);
    EXPECT_EQ(s.depth.width(), 24);
    EXPECT_NEAR(s.phi0, std::numbers::pi / 6, 1e-15);
    EXPECT_THROW(scene_from_json(Json::parse(R"({"suite": "nope"})")), UsageError);
}

TEST(RunPipeline, WritesArtifactsAndMetrics)
{
    TempDir dir;
    auto const gt = render(suite_specs(24)[2]);
    PipelineConfig cfg = stage(gt, dir);
    auto const rep = run_pipeline(cfg);
    for (char const *f : {"config.json", "diffuse.png", "specular.png", "diffuse.pfm", "specular.pfm",
                          "specular_sparse.pfm", "convergence.csv", "summary.json", "metrics.json", "ssim_map.pfm"})
        EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
    ASSERT_TRUE(rep.metrics.has_value());
    Json const m = read_json(dir / "out" / "metrics.json");
    EXPECT_NEAR(m["ssim"].get<double>(), rep.metrics->ssim, 1e-12);
    EXPECT_GT(rep.metrics->ssim, 0.8);

    PipelineConfig echoed;
    apply_json(echoed, read_json(dir / "out" / "config.json"));
    EXPECT_EQ(to_json(echoed), to_json(cfg));

    std::istringstream csv(slurp(dir / "out" / "convergence.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "iteration,error,objective,mu,gamma");
    int rows = 0;
    while (std::getline(csv, line))
        ++rows;
    EXPECT_EQ(rows, rep.output.result.iterations);
    EXPECT_GT(read_json(dir / "out" / "summary.json")["phase_projections"].get<int>(), 0);
}

TEST(RunPipeline, OutputsSumToMeanInput)
{
    TempDir dir;
    auto const gt = render(suite_specs(24)[6]);
    auto const rep = run_pipeline(stage(gt, dir));
    auto const &o = rep.output;
    Image const &mean = o.mean_input;
    for (std::size_t i = 0; i < mean.data().size(); ++i) {
        double const d = o.diffuse.data()[i], s = o.specular.data()[i], m = mean.data()[i];
        if (d <= m)
            EXPECT_NEAR(d + s, m, 1e-15);
        else
            EXPECT_EQ(s, 0.0);
    }
}

TEST(RunPipeline, NothingToSeparateWithoutSpecular)
{
    TempDir dir;
    auto spec = suite_specs(24)[0];
    spec.k_s = 0.0;
    auto const gt = render(spec);
    auto const rep = run_pipeline(stage(gt, dir));
    Image const mean = gt.stack.mean();
    double se = 0.0;
    for (std::size_t i = 0; i < mean.data().size(); ++i)
        se += std::pow(rep.output.diffuse.data()[i] - mean.data()[i], 2);
    EXPECT_LE(std::sqrt(se / static_cast<double>(mean.data().size())), 1e-3);
}

TEST(RunPipeline, PlainModeSkipsPhaseWork)
{
    TempDir dir;
    auto const gt = render(suite_specs(24)[4]);
    PipelineConfig cfg = stage(gt, dir);
    cfg.separation.solver.mode = SolverMode::plain;
    auto const rep = run_pipeline(cfg);
    EXPECT_EQ(rep.output.result.phase_projections, 0);
    EXPECT_EQ(read_json(dir / "out" / "summary.json")["phase_projections"].get<int>(), 0);
    for (auto const &t : rep.output.result.trace)
        EXPECT_EQ(t.gamma, 0.0);
}

TEST(RunPipeline, ReproducibleBytes)
{
    TempDir a, b;
    auto const gt = render(suite_specs(24)[5]);
    run_pipeline(stage(gt, a));
    run_pipeline(stage(gt, b));
    for (char const *f : {"diffuse.pfm", "specular.pfm", "specular_sparse.pfm", "diffuse.png", "convergence.csv",
                          "summary.json", "metrics.json", "ssim_map.pfm"})
        EXPECT_EQ(slurp(a / "out" / f), slurp(b / "out" / f)) << f;
}

TEST(RunPipeline, MosaicInputMatchesFourFiles)
{
    TempDir dir;
    auto const gt = render(suite_specs(24)[1]);
    PipelineConfig four = stage(gt, dir);
    four.metrics = false;
    auto const ref = run_pipeline(four);

    Image mosaic = pack_mosaic(gt.stack);
    write_pfm(dir / "mosaic.pfm", mosaic);
    PipelineConfig m = four;
    m.input_mode = InputMode::mosaic;
    m.inputs = {(dir / "mosaic.pfm").string()};
    m.output_dir = (dir / "out2").string();
    auto const rep = run_pipeline(m);
    EXPECT_EQ(rep.output.diffuse, ref.output.diffuse);
}

TEST(RunPipeline, InputErrorsCarryFileContext)
{
    TempDir dir;
    auto const gt = render(suite_specs(16)[0]);
    PipelineConfig cfg = stage(gt, dir);
    write_pfm(dir / "a090.pfm", Image(8, 8, 3));
    try {
        run_pipeline(cfg);
        FAIL();
    } catch (DataError const &e) {
        EXPECT_NE(std::string(e.what()).find("a090.pfm"), std::string::npos) << e.what();
    }
    Image bad = gt.stack[1];
    bad.data()[5] = std::nan("");
    write_pfm(dir / "a090.pfm", gt.stack[2]);
    write_pfm(dir / "a045.pfm", bad);
    EXPECT_THROW(run_pipeline(cfg), DataError);
}

TEST(RunSuite, RowsAndTables)
{
    TempDir dir;
    SuiteOptions opt;
    opt.output_dir = (dir / "suite").string();
    opt.size = 16;
    opt.params.block_size = 8;
    opt.params.n4 = 3;
    opt.scenes = {"sphere-weak", "sphere-saturated"};
    auto const rows = run_suite(opt);
    ASSERT_EQ(rows.size(), 6u);
    for (auto const &r : rows)
        EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_EQ(rows[0].mode, "full");
    EXPECT_EQ(rows[5].mode, "plain");
    std::string const md = slurp(dir / "suite" / "suite.md");
    EXPECT_NE(md.find("sphere-saturated"), std::string::npos);
    std::istringstream jsonl(slurp(dir / "suite" / "suite.jsonl"));
    std::string line;
    int n = 0;
    while (std::getline(jsonl, line)) {
        auto const j = Json::parse(line);
        EXPECT_TRUE(j.contains("scene"));
        ++n;
    }
    EXPECT_EQ(n, 6);

    opt.scenes = {"missing"};
    EXPECT_THROW(run_suite(opt), UsageError);
}

TEST(Cli, ExitCodes)
{
    TempDir dir;
    std::string const out = (dir / "r").string();
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("decompose --bogus"), 2);
    EXPECT_EQ(run_cli("render --suite-scene sphere-weak --size 16 --mosaic -o " + out), 0);
    EXPECT_TRUE(fs::exists(dir / "r" / "mosaic.png"));
    EXPECT_EQ(run_cli("render --suite-scene sphere-weak --size 16 --png-bits 12 -o " + out), 2);

    std::string const inputs = " -i " + out + "/angle_000.pfm " + out + "/angle_045.pfm " + out + "/angle_090.pfm " +
                               out + "/angle_135.pfm";
    std::string const dec = "decompose --block-size 8 --n4 3 --ground-truth " + out + "/diffuse_gt.pfm" + inputs;
    EXPECT_EQ(run_cli(dec + " -o " + (dir / "d").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "d" / "metrics.json"));
    EXPECT_EQ(run_cli(dec + " --max-iters 2 -o " + (dir / "e").string()), 4);
    EXPECT_TRUE(fs::exists(dir / "e" / "diffuse.png"));
    EXPECT_EQ(run_cli(dec + " --mode sideways -o " + (dir / "f").string()), 2);
    EXPECT_EQ(run_cli("decompose -i nope0.png nope1.png nope2.png nope3.png -o " + (dir / "g").string()), 3);
    EXPECT_EQ(run_cli("decompose --mosaic " + out + "/mosaic.png -o " + (dir / "h").string() +
                      " --block-size 8 --n4 3"), 0);

    std::ofstream(dir / "cfg.json") << R"({"solver": {"max_iters": 1}})";
    EXPECT_EQ(run_cli(dec + " -c " + (dir / "cfg.json").string() + " -o " + (dir / "k").string()), 4);
    std::ofstream(dir / "bad.json") << R"({"solver": {"maxiters": 1}})";
    EXPECT_EQ(run_cli(dec + " -c " + (dir / "bad.json").string() + " -o " + (dir / "l").string()), 2);

    EXPECT_EQ(run_cli("metrics " + out + "/diffuse_gt.pfm " + out + "/diffuse_gt.pfm"), 0);
    EXPECT_EQ(run_cli("metrics " + out + "/diffuse_gt.pfm " + out + "/angle_000.png --per-channel"), 0);
    EXPECT_EQ(run_cli("metrics " + out + "/diffuse_gt.pfm " + (dir / "none.pfm").string()), 3);
    EXPECT_EQ(run_cli("suite --size 8 --scenes sphere-weak --modes plain --n4 2 --block-size 4 -o " +
                      (dir / "s").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "s" / "suite.csv"));
}
