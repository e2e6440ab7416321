// SPDX-License-Identifier: Apache-2.0
#include "noisediff/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "noisediff/dataset.hpp"
#include "noisediff/errors.hpp"
#include "noisediff/highdim_stats.hpp"
#include "noisediff/interpolate.hpp"
#include "noisediff/io.hpp"
#include "noisediff/mlp_score.hpp"
#include "noisediff/pf_ode.hpp"

namespace noisediff {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
    std::string config;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;

    void add(CLI::App* app) {
        app->add_option("--config", config, "JSON file of flag defaults (flags given on the command line win)");
        seed_opt = app->add_option("--seed", seed, "Seed for all randomness (fallback: $NOISEDIFF_SEED, then 0)");
    }

    std::uint64_t resolved_seed() const {
        if (seed_opt->count() > 0) return seed;
        if (const char* env = std::getenv("NOISEDIFF_SEED"); env && *env) {
            try {
                std::size_t used = 0;
                const auto v = std::stoull(env, &used);
                if (used != std::string(env).size()) throw std::invalid_argument(env);
                return v;
            } catch (const std::exception&) {
                throw ValidationError("NOISEDIFF_SEED must be an unsigned integer");
            }
        }
        return 0;
    }
};

struct ScheduleOptions {
    SigmaSchedule schedule;

    void add(CLI::App* app) {
        app->add_option("--sigma-min", schedule.sigma_min, "Smallest noise level")->capture_default_str();
        app->add_option("--sigma-max", schedule.sigma_max, "Latent noise level T")->capture_default_str();
        app->add_option("--steps", schedule.n_steps, "Grid points of the noise schedule")->capture_default_str();
        app->add_option("--rho", schedule.rho, "Grid curvature")->capture_default_str();
    }
};

struct BackendOptions {
    std::string mixture;
    std::string checkpoint;

    void add(CLI::App* app) {
        app->add_option("--mixture", mixture, "Gaussian mixture JSON (analytic score)");
        app->add_option("--checkpoint", checkpoint, "Score network checkpoint");
    }

    std::unique_ptr<ScoreModel> load() const {
        if (mixture.empty() == checkpoint.empty()) {
            throw ValidationError("backend: exactly one of --mixture or --checkpoint is required");
        }
        if (!mixture.empty()) return std::make_unique<GaussianMixture>(io::load_mixture(mixture));
        return std::make_unique<ScoreNet>(io::load_checkpoint(checkpoint));
    }
};

std::string config_value_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw ValidationError("config: values must be strings, numbers or booleans");
}

// Fills options that were not given on the command line from the flat JSON config.
void apply_config(CLI::App* sub, const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: top level must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "config") throw ValidationError("config: key 'config' is not allowed");
        CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr) throw ValidationError("config: unknown key '" + key + "' for " + sub->get_name());
        if (opt->count() > 0) continue;
        try {
            opt->add_result(config_value_string(value));
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw ValidationError("config: key '" + key + "': " + e.what());
        }
    }
}

void emit_image_if_requested(const std::string& path, const Tensor& t) {
    if (!path.empty()) io::write_image(path, t);
}

void check_output(const std::string& path, const char* flag) {
    if (path.empty()) throw ValidationError(std::string(flag) + " is required");
}

// ---------------------------------------------------------------- subcommands

struct GenDataset {
    CommonOptions common;
    std::string out_dir;
    std::size_t size = 16;
    std::size_t components = 4;
    double delta = GaussianMixture::default_delta;
    std::size_t samples = 256;

    void add(CLI::App* app) {
        common.add(app);
        app->add_option("--out-dir", out_dir, "Directory for mixture.json, centers, templates and samples");
        app->add_option("--size", size, "Image side length")->capture_default_str();
        app->add_option("--components", components, "Mixture components (templates)")->capture_default_str();
        app->add_option("--delta", delta, "Per-component std")->capture_default_str();
        app->add_option("--samples", samples, "Training samples written to samples.ndtn")->capture_default_str();
    }

    int run() const {
        check_output(out_dir, "--out-dir");
        if (size < 2) throw ValidationError("--size must be >= 2");
        if (samples == 0) throw ValidationError("--samples must be positive");
        const auto model = template_mixture(size, components, delta);
        SeededRng rng(common.resolved_seed());
        const auto data = sample_dataset(model, samples, rng);

        fs::create_directories(out_dir);
        const fs::path dir(out_dir);
        io::save_mixture(dir / "mixture.json", model);
        for (std::size_t k = 0; k < model.components(); ++k) {
            io::write_image(dir / ("template_" + template_name(k) + ".pgm"), model.centers()[k]);
        }
        std::vector<double> flat;
        for (const auto& x : data) flat.insert(flat.end(), x.data().begin(), x.data().end());
        io::write_tensor(dir / "samples.ndtn", Tensor({samples, size, size}, std::move(flat)));
        io::write_tensor(dir / "checkerboard.ndtn", checkerboard(size));
        std::cout << "wrote " << model.components() << " components and " << samples << " samples to " << out_dir
                  << "\n";
        return exit_ok;
    }
};

struct TrainScore {
    CommonOptions common;
    std::string data;
    std::string out;
    TrainConfig config;

    void add(CLI::App* app) {
        common.add(app);
        app->add_option("--data", data, "Stacked sample tensor [N, ...] (e.g. samples.ndtn)");
        app->add_option("--out", out, "Checkpoint output path");
        app->add_option("--train-steps", config.steps, "Adam steps")->capture_default_str();
        app->add_option("--batch", config.batch_size, "Batch size")->capture_default_str();
        app->add_option("--lr", config.learning_rate, "Learning rate")->capture_default_str();
        app->add_flag("!--constant-lr", config.linear_decay, "Disable the linear learning-rate decay");
        app->add_option("--t-min", config.t_min, "Smallest training noise level")->capture_default_str();
        app->add_option("--t-max", config.t_max, "Largest training noise level")->capture_default_str();
        app->add_option("--hidden", config.hidden, "Hidden width")->capture_default_str();
    }

    int run() {
        check_output(data, "--data");
        check_output(out, "--out");
        config.seed = common.resolved_seed();
        const Tensor stacked = io::read_tensor(data);
        if (stacked.shape().size() < 2) throw ValidationError("--data must have a leading sample dimension");
        const Shape item(stacked.shape().begin() + 1, stacked.shape().end());
        const std::size_t per = shape_size(item);
        std::vector<Tensor> dataset;
        for (std::size_t i = 0; i < stacked.shape()[0]; ++i) {
            const auto first = stacked.data().begin() + static_cast<std::ptrdiff_t>(i * per);
            dataset.emplace_back(item, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(per)));
        }
        const auto params = train(config, dataset);
        io::save_checkpoint(out, params);
        std::cout << "trained " << config.steps << " steps on " << dataset.size() << " samples -> " << out << "\n";
        return exit_ok;
    }
};

struct EncodeDecode {
    bool encoding = true;
    CommonOptions common;
    ScheduleOptions schedule;
    BackendOptions backend;
    std::string input;
    std::string output;
    std::string image;
    double sigma_start = 0.0;
    CLI::Option* sigma_start_opt = nullptr;

    void add(CLI::App* app) {
        common.add(app);
        schedule.add(app);
        backend.add(app);
        app->add_option("--input", input, "Input tensor (.ndtn) or image (.pgm/.ppm)");
        app->add_option("--output", output, "Output tensor path");
        app->add_option("--image", image, "Optional PGM/PPM rendering of the output");
        if (!encoding) {
            sigma_start_opt =
                app->add_option("--sigma-start", sigma_start, "Noise level of the input (default: --sigma-max)");
        }
    }

    int run() const {
        check_output(input, "--input");
        check_output(output, "--output");
        schedule.schedule.validate();
        const auto model = backend.load();
        const OdeConfig ode{schedule.schedule, *model};
        const Tensor x = io::load_any(input);
        Tensor result;
        if (encoding) {
            result = encode(x, ode);
        } else {
            const double start =
                sigma_start_opt->count() > 0 ? sigma_start : schedule.schedule.sigma_max;
            if (!(start >= schedule.schedule.sigma_min && start <= schedule.schedule.sigma_max)) {
                throw ValidationError("--sigma-start must lie in [sigma-min, sigma-max]");
            }
            result = decode_from(x, start, ode);
        }
        io::write_tensor(output, result);
        emit_image_if_requested(image, result);
        return exit_ok;
    }
};

struct Interpolate {
    CommonOptions common;
    ScheduleOptions schedule;
    BackendOptions backend;
    std::string a, b, output, image, latent_out;
    std::string method = "noisediffusion";
    double lambda = 0.5;
    double gamma = std::sqrt(0.1);
    double c = 2.0;
    double k = 2.2;
    double sigma = 0.0;
    CLI::Option* sigma_opt = nullptr;
    bool independent_noise = false;

    void add(CLI::App* app) {
        common.add(app);
        schedule.add(app);
        backend.add(app);
        app->add_option("--a", a, "First image (lambda = 0)");
        app->add_option("--b", b, "Second image (lambda = 1)");
        app->add_option("--output", output, "Output tensor path");
        app->add_option("--image", image, "Optional PGM/PPM rendering of the output");
        app->add_option("--latent-out", latent_out, "Optional pre-decode latent output");
        app->add_option("--method", method, "slerp | noise-inject | noisediffusion")
            ->check(CLI::IsMember({"slerp", "noise-inject", "noisediffusion"}))
            ->capture_default_str();
        app->add_option("--lambda", lambda, "Interpolation weight in [0, 1]")->capture_default_str();
        app->add_option("--gamma", gamma, "Lubrication noise coefficient in [0, 1)")->capture_default_str();
        app->add_option("--c", c, "Compensation scale")->capture_default_str();
        app->add_option("--k", k, "Clip boundary in units of sigma-max (inf disables)")->capture_default_str();
        sigma_opt = app->add_option("--sigma", sigma, "Noise level for noise-inject (default: --sigma-max)");
        app->add_flag("--independent-noise", independent_noise, "noise-inject: draw separate noise per image");
    }

    int run() const {
        check_output(a, "--a");
        check_output(b, "--b");
        check_output(output, "--output");
        schedule.schedule.validate();
        const auto model = backend.load();
        const OdeConfig ode{schedule.schedule, *model};
        const Tensor xa = io::load_any(a);
        const Tensor xb = io::load_any(b);
        SeededRng rng(common.resolved_seed());

        Tensor latent;
        Tensor result;
        if (method == "slerp") {
            latent = slerp(encode(xa, ode), encode(xb, ode), lambda);
            result = decode(latent, ode);
        } else if (method == "noise-inject") {
            const double level = sigma_opt->count() > 0 ? sigma : schedule.schedule.sigma_max;
            if (!(level >= schedule.schedule.sigma_min && level <= schedule.schedule.sigma_max)) {
                throw ValidationError("--sigma must lie in [sigma-min, sigma-max]");
            }
            latent = noise_inject_latent(xa, xb, lambda, level, !independent_noise, rng);
            result = decode_from(latent, level, ode);
        } else {
            const auto plan = plan_from_lambda(lambda, gamma, c, k);
            auto trace = noise_diffusion_trace(xa, xb, plan, rng, ode);
            latent = std::move(trace.latent);
            result = std::move(trace.output);
        }
        if (!latent_out.empty()) io::write_tensor(latent_out, latent);
        io::write_tensor(output, result);
        emit_image_if_requested(image, result);
        return exit_ok;
    }
};

struct Stats {
    CommonOptions common;
    ScheduleOptions schedule;
    std::string suite = "all";
    std::size_t trials = 1000;
    CLI::Option* trials_opt = nullptr;
    std::size_t n = 10000;
    double alpha = std::sqrt(1.0 / 3.0);
    double beta = std::sqrt(1.0 / 3.0);
    double gamma = std::sqrt(1.0 / 3.0);
    std::string mixture;
    double denoise_level = 2.0;
    std::string csv;
    std::string json;

    void add(CLI::App* app) {
        common.add(app);
        schedule.add(app);
        app->add_option("--suite", suite, "norm | orthogonality | weighted-norm | empirical-rule | mismatch | all")
            ->check(CLI::IsMember({"norm", "orthogonality", "weighted-norm", "empirical-rule", "mismatch", "all"}))
            ->capture_default_str();
        trials_opt = app->add_option("--trials", trials, "Trials (empirical-rule: samples, default 1000000)");
        app->add_option("--n", n, "Dimension")->capture_default_str();
        app->add_option("--alpha", alpha, "weighted-norm coefficient")->capture_default_str();
        app->add_option("--beta", beta, "weighted-norm coefficient")->capture_default_str();
        app->add_option("--gamma", gamma, "weighted-norm coefficient")->capture_default_str();
        app->add_option("--mixture", mixture, "mismatch: mixture JSON (default: 16x16 templates)");
        app->add_option("--denoise-level", denoise_level, "mismatch: decoding noise level")->capture_default_str();
        app->add_option("--csv", csv, "Write CSV rows to this file");
        app->add_option("--json", json, "Write JSON summary to this file");
    }

    int run() const {
        const std::uint64_t seed = common.resolved_seed();
        std::vector<StatReport> reports;
        const bool all = suite == "all";
        if (all || suite == "norm") reports.push_back(norm_concentration(n, trials, seed));
        if (all || suite == "orthogonality") reports.push_back(orthogonality_stats(n, trials, seed));
        if (all || suite == "weighted-norm") reports.push_back(weighted_norm_ratio(alpha, beta, gamma, n, trials, seed));
        if (all || suite == "empirical-rule") {
            const std::size_t count = trials_opt->count() > 0 ? trials : 1000000;
            reports.push_back(empirical_rule_check(count, seed));
        }
        if (all || suite == "mismatch") {
            schedule.schedule.validate();
            const auto model = mixture.empty() ? template_mixture(16, 4) : io::load_mixture(mixture);
            std::vector<double> levels;
            for (double f : {0.0, 0.7, 0.875, 1.0, 1.125, 1.25}) levels.push_back(f * denoise_level);
            const std::size_t count = trials_opt->count() > 0 ? trials : 64;
            auto report = mismatch_experiment(model, levels, denoise_level, schedule.schedule, count, seed);
            for (auto& row : report.levels) {
                row.mse_to_center.experiment = "mismatch_level_" + std::to_string(row.level);
                reports.push_back(std::move(row.mse_to_center));
            }
            reports.push_back(std::move(report.summary));
        }

        std::ostringstream rows;
        rows << io::report_csv_header() << "\n";
        for (const auto& r : reports) rows << io::report_csv_row(r) << "\n";
        std::cout << rows.str();
        if (!csv.empty()) io::write_file_atomic(csv, rows.str());
        if (!json.empty()) {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& r : reports) j.push_back(io::report_json(r));
            io::write_file_atomic(json, j.dump(2) + "\n");
        }
        return exit_ok;
    }
};

struct Diagnose {
    CommonOptions common;
    ScheduleOptions schedule;
    std::string input;
    double sigma = 0.0;
    CLI::Option* sigma_opt = nullptr;
    std::string json;

    void add(CLI::App* app) {
        common.add(app);
        schedule.add(app);
        app->add_option("--input", input, "Latent tensor");
        sigma_opt = app->add_option("--sigma", sigma, "Expected noise level (default: --sigma-max)");
        app->add_option("--json", json, "Write the diagnostic as JSON");
    }

    int run() const {
        check_output(input, "--input");
        const double level = sigma_opt->count() > 0 ? sigma : schedule.schedule.sigma_max;
        const Tensor latent = io::read_tensor(input);
        const double ratio = sphere_radius_diag(latent, level);
        std::cout << "sphere_radius_ratio " << std::setprecision(17) << ratio << "\n";
        if (!json.empty()) {
            nlohmann::json j{{"input", input}, {"sigma", level}, {"n", latent.size()}, {"ratio", ratio}};
            io::write_file_atomic(json, j.dump(2) + "\n");
        }
        return exit_ok;
    }
};

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Diffusion latent interpolation laboratory", "noisediff"};
    app.require_subcommand(1);

    GenDataset gen;
    TrainScore trainer;
    EncodeDecode enc;
    EncodeDecode dec;
    dec.encoding = false;
    Interpolate interp;
    Stats stats;
    Diagnose diag;

    auto* gen_cmd = app.add_subcommand("gen-dataset", "Write a template mixture, its images and training samples");
    auto* train_cmd = app.add_subcommand("train-score", "Fit the score network by denoising score matching");
    auto* enc_cmd = app.add_subcommand("encode", "Image -> latent through the probability flow ODE");
    auto* dec_cmd = app.add_subcommand("decode", "Latent -> image through the probability flow ODE");
    auto* interp_cmd = app.add_subcommand("interpolate", "Interpolate two images");
    auto* stats_cmd = app.add_subcommand("stats", "Run high-dimensional statistics suites");
    auto* diag_cmd = app.add_subcommand("diagnose", "Sphere-radius diagnostic of a latent");
    gen.add(gen_cmd);
    trainer.add(train_cmd);
    enc.add(enc_cmd);
    dec.add(dec_cmd);
    interp.add(interp_cmd);
    stats.add(stats_cmd);
    diag.add(diag_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return exit_validation;
    }

    try {
        if (gen_cmd->parsed()) {
            apply_config(gen_cmd, gen.common.config);
            return gen.run();
        }
        if (train_cmd->parsed()) {
            apply_config(train_cmd, trainer.common.config);
            return trainer.run();
        }
        if (enc_cmd->parsed()) {
            apply_config(enc_cmd, enc.common.config);
            return enc.run();
        }
        if (dec_cmd->parsed()) {
            apply_config(dec_cmd, dec.common.config);
            return dec.run();
        }
        if (interp_cmd->parsed()) {
            apply_config(interp_cmd, interp.common.config);
            return interp.run();
        }
        if (stats_cmd->parsed()) {
            apply_config(stats_cmd, stats.common.config);
            return stats.run();
        }
        if (diag_cmd->parsed()) {
            apply_config(diag_cmd, diag.common.config);
            return diag.run();
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_validation;
    }
    return exit_validation;
}

}  // namespace noisediff
