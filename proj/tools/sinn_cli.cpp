// Experiment driver: data generation, training, sampling, statistics reports
// and transition-rate evaluation, reproducible from flat config files.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "sinn/experiment.hpp"
#include "sinn/io.hpp"
#include "sinn/parallel.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* cfg = cmd->add_option("--config", args.config_path, "experiment config file");
    auto* pre = cmd->add_option("--preset", args.preset,
                                "shipped preset name (see `sinn preset list`)");
    cfg->excludes(pre);
    if (config_required) {
        // one of --config / --preset
        cmd->preparse_callback([](std::size_t) {});
    }
    cmd->add_option("--out", args.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", args.seed_override, "override experiment.seed / train.base_seed");
    cmd->add_option("--threads", args.threads,
                    "worker threads (0 = serial deterministic mode)")
        ->capture_default_str();
}

sinn::ExperimentConfig load_config(const CommonArgs& args) {
    sinn::ExperimentConfig c;
    if (!args.preset.empty())
        c = sinn::load_preset(args.preset);
    else if (!args.config_path.empty())
        c = sinn::parse_config(sinn::read_text_file(args.config_path));
    else
        throw sinn::ParameterError("one of --config or --preset is required");
    if (args.seed_override) {
        c.seed = *args.seed_override;
        c.train.base_seed = *args.seed_override;
    }
    c.validate();
    return c;
}

fs::path prepare_out(const CommonArgs& args) {
    fs::path dir(args.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw sinn::IoError("cannot create output directory " + dir.string());
    return dir;
}

void write_resolved(const fs::path& dir, const sinn::ExperimentConfig& c,
                    const std::string& suffix) {
    sinn::write_text_file((dir / (c.name + "_" + suffix + ".cfg")).string(),
                          sinn::resolve_config(c));
}

int cmd_generate(const CommonArgs& args, bool csv) {
    const auto c = load_config(args);
    const auto dir = prepare_out(args);
    const auto data = sinn::generate_data(c);

    sinn::save_ensemble((dir / (c.name + "_fine.sine")).string(), data.fine);
    sinn::save_ensemble((dir / (c.name + "_train.sine")).string(), data.coarse_train);
    sinn::save_ensemble((dir / (c.name + "_val.sine")).string(), data.coarse_val);
    if (csv) {
        sinn::write_text_file((dir / (c.name + "_train.csv")).string(),
                              sinn::ensemble_to_csv(data.coarse_train));
        sinn::write_text_file((dir / (c.name + "_val.csv")).string(),
                              sinn::ensemble_to_csv(data.coarse_val));
    }

    std::ostringstream meta;
    meta.precision(17);
    meta << "seed = " << sinn::data_seed(c) << "\n"
         << "fine_dt = " << c.fine_dt << "\n"
         << "coarse_dt = " << c.model_dt() << "\n"
         << "fine_shape = " << data.fine.batch << "x" << data.fine.time << "x" << data.fine.dim
         << "\n"
         << "train_shape = " << data.coarse_train.batch << "x" << data.coarse_train.time << "x"
         << data.coarse_train.dim << "\n"
         << "val_shape = " << data.coarse_val.batch << "x" << data.coarse_val.time << "x"
         << data.coarse_val.dim << "\n";
    sinn::write_text_file((dir / (c.name + "_generate_meta.txt")).string(), meta.str());
    write_resolved(dir, c, "generate");
    std::cout << "generated " << data.coarse_train.batch << "+" << data.coarse_val.batch
              << " trajectories at dt=" << c.model_dt() << "\n";
    return 0;
}

int cmd_train(const CommonArgs& args, const std::string& data_dir) {
    const auto c = load_config(args);
    const auto dir = prepare_out(args);

    std::optional<sinn::Ensemble> train_ens, val_ens;
    if (!c.analytic_targets) {
        const fs::path src = data_dir.empty() ? dir : fs::path(data_dir);
        train_ens = sinn::load_ensemble((src / (c.name + "_train.sine")).string());
        val_ens = sinn::load_ensemble((src / (c.name + "_val.sine")).string());
    }
    const auto spec = sinn::build_loss_spec(c, train_ens ? &*train_ens : nullptr,
                                            val_ens ? &*val_ens : nullptr);

    const std::string best_path = (dir / (c.name + "_best.ckpt")).string();
    auto callback = [&](const sinn::TrainReportEntry& e, const sinn::SinnParams& p,
                        bool improved) {
        if (improved) sinn::save_checkpoint(best_path, c.model, p);
        std::cout << "iter " << e.iteration << "  eps_T " << e.train_loss << "  eps_V "
                  << e.val_loss << std::endl;
    };

    write_resolved(dir, c, "train");
    try {
        const auto result = sinn::run_training(c, spec, callback);
        sinn::save_checkpoint((dir / (c.name + "_final.ckpt")).string(), c.model,
                              result.params);
        sinn::write_text_file((dir / (c.name + "_report.csv")).string(),
                              sinn::to_csv(result.report));
        std::cout << "stopped at iteration " << result.iterations << " with eps_V "
                  << result.best_val_loss << " (restarts used: " << result.restarts_used
                  << ")\n";
        return 0;
    } catch (const sinn::TrainingFailed& failed) {
        sinn::write_text_file((dir / (c.name + "_report.csv")).string(),
                              sinn::to_csv(failed.report));
        if (!failed.best_params.layers.empty())
            sinn::save_checkpoint((dir / (c.name + "_final.ckpt")).string(), c.model,
                                  failed.best_params);
        throw;
    }
}

int cmd_sample(const CommonArgs& args, const std::string& checkpoint, std::size_t batch,
               std::size_t steps, std::uint64_t sample_seed, bool csv) {
    const auto c = load_config(args);
    const auto dir = prepare_out(args);
    const auto [model, params] = sinn::load_checkpoint(checkpoint);
    const auto noise = c.input_noise().with_seed(sample_seed);
    const auto ens = sinn::sinn_generate(params, model, noise, batch, steps, c.model_dt());
    sinn::save_ensemble((dir / (c.name + "_sample.sine")).string(), ens);
    if (csv)
        sinn::write_text_file((dir / (c.name + "_sample.csv")).string(),
                              sinn::ensemble_to_csv(ens));
    std::cout << "sampled " << batch << " trajectories of " << steps << " steps at dt="
              << c.model_dt() << "\n";
    return 0;
}

sinn::Ensemble load_any_ensemble(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv")
        return sinn::ensemble_from_csv(sinn::read_text_file(path));
    return sinn::load_ensemble(path);
}

int cmd_stats(const CommonArgs& args, const std::string& ensemble_path,
              const std::string& method, std::size_t max_lag) {
    const auto dir = prepare_out(args);
    sinn::Ensemble e = load_any_ensemble(ensemble_path);
    if (e.dim != 1) e = e.component(0);
    if (max_lag == 0) max_lag = (e.time - 1) / 2;
    const bool fft = method == "fft";
    if (!fft && method != "brute")
        throw sinn::ParameterError("stats method must be brute or fft");

    const auto acf = fft ? sinn::acf_fft(e, max_lag) : sinn::acf_brute(e, max_lag);
    const auto acf2 =
        fft ? sinn::acf_fft(e.squared(), max_lag) : sinn::acf_brute(e.squared(), max_lag);
    const auto grid = sinn::kde_grid(e.data);
    const auto pdf = sinn::kde(e.data, grid);

    const std::string stem = fs::path(ensemble_path).stem().string();
    sinn::write_text_file((dir / (stem + "_acf.csv")).string(), sinn::to_csv(acf));
    sinn::write_text_file((dir / (stem + "_acf2.csv")).string(), sinn::to_csv(acf2));
    sinn::write_text_file((dir / (stem + "_pdf.csv")).string(), sinn::to_csv(pdf));
    std::cout << "wrote " << stem << "_acf.csv, " << stem << "_acf2.csv, " << stem
              << "_pdf.csv (method=" << method << ")\n";
    return 0;
}

int cmd_rate(const CommonArgs& args, const std::string& ensemble_path, double window_lo,
             double window_hi) {
    const auto dir = prepare_out(args);
    const sinn::Ensemble e = load_any_ensemble(ensemble_path);
    const auto max_t = std::min<std::size_t>(
        e.time - 1, static_cast<std::size_t>(window_hi / e.dt * 1.5) + 1);
    const auto curve = sinn::transition_correlation(e, max_t);
    const auto fit = sinn::transition_rate(curve, window_lo, window_hi);

    const std::string stem = fs::path(ensemble_path).stem().string();
    sinn::write_text_file((dir / (stem + "_transition.csv")).string(), sinn::to_csv(curve));
    std::ostringstream summary;
    summary.precision(17);
    summary << "k_ab,r_squared,window_lo,window_hi,degenerate\n"
            << fit.k_ab << ',' << fit.r_squared << ',' << window_lo << ',' << window_hi << ','
            << (fit.degenerate ? 1 : 0) << "\n";
    sinn::write_text_file((dir / (stem + "_rate.csv")).string(), summary.str());
    std::cout << "k_AB = " << fit.k_ab << "  R^2 = " << fit.r_squared << "  window = ["
              << window_lo << ", " << window_hi << "]\n";
    return 0;
}

int cmd_preset(const std::string& action, const std::string& name, const std::string& out_dir) {
    if (action == "list") {
        for (const auto& [key, _] : sinn::presets()) std::cout << key << "\n";
        return 0;
    }
    if (action == "show") {
        const auto it = sinn::presets().find(name);
        if (it == sinn::presets().end()) throw sinn::ParameterError("unknown preset: " + name);
        std::cout << it->second;
        return 0;
    }
    if (action == "write") {
        fs::path dir(out_dir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        for (const auto& [key, text] : sinn::presets())
            sinn::write_text_file((dir / (key + ".cfg")).string(), text);
        std::cout << "wrote " << sinn::presets().size() << " preset files to " << dir.string()
                  << "\n";
        return 0;
    }
    throw sinn::ParameterError("preset action must be list, show or write");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"statistics-trained recurrent generator for stochastic dynamics"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, sample_args, stats_args, rate_args;
    bool gen_csv = false, sample_csv = false;
    std::string data_dir;
    std::string checkpoint, ensemble_path, stats_method = "brute";
    std::size_t sample_batch = 5000, sample_steps = 5001, stats_max_lag = 0;
    std::uint64_t sample_seed = 1;
    double window_lo = 25.0, window_hi = 50.0;
    std::string preset_action = "list", preset_name, preset_out = "presets";

    auto* gen = app.add_subcommand("generate", "simulate reference data and coarse-grain it");
    add_common(gen, gen_args, true);
    gen->add_flag("--csv", gen_csv, "also write CSV copies");

    auto* tr = app.add_subcommand("train", "train the generator on the configured targets");
    add_common(tr, train_args, true);
    tr->add_option("--data-dir", data_dir, "directory holding generated ensembles (default --out)");

    auto* sa = app.add_subcommand("sample", "generate trajectories from a checkpoint");
    add_common(sa, sample_args, true);
    sa->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    sa->add_option("--batch", sample_batch, "trajectory count")->capture_default_str();
    sa->add_option("--steps", sample_steps, "samples per trajectory")->capture_default_str();
    sa->add_option("--sample-seed", sample_seed, "noise seed")->capture_default_str();
    sa->add_flag("--csv", sample_csv, "also write a CSV copy");

    auto* st = app.add_subcommand("stats", "ACF / squared-ACF / KDE reports for an ensemble");
    add_common(st, stats_args, false);
    st->add_option("--ensemble", ensemble_path, "ensemble file (.sine or .csv)")->required();
    st->add_option("--method", stats_method, "acf estimator: brute | fft")->capture_default_str();
    st->add_option("--max-lag", stats_max_lag, "maximum lag (default: time/2)");

    auto* ra = app.add_subcommand("rate", "transition correlation curve and rate regression");
    add_common(ra, rate_args, false);
    ra->add_option("--ensemble", ensemble_path, "1-dim ensemble file")->required();
    ra->add_option("--window-lo", window_lo, "regression window start (time units)")
        ->capture_default_str();
    ra->add_option("--window-hi", window_hi, "regression window end (time units)")
        ->capture_default_str();

    auto* pr = app.add_subcommand("preset", "list, show or write the shipped presets");
    pr->add_option("action", preset_action, "list | show | write")->capture_default_str();
    pr->add_option("name", preset_name, "preset name (for show)");
    pr->add_option("--out", preset_out, "output directory (for write)")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            sinn::set_threads(gen_args.threads);
            return cmd_generate(gen_args, gen_csv);
        }
        if (tr->parsed()) {
            sinn::set_threads(train_args.threads);
            return cmd_train(train_args, data_dir);
        }
        if (sa->parsed()) {
            sinn::set_threads(sample_args.threads);
            return cmd_sample(sample_args, checkpoint, sample_batch, sample_steps, sample_seed,
                              sample_csv);
        }
        if (st->parsed()) {
            sinn::set_threads(stats_args.threads);
            return cmd_stats(stats_args, ensemble_path, stats_method, stats_max_lag);
        }
        if (ra->parsed()) {
            sinn::set_threads(rate_args.threads);
            return cmd_rate(rate_args, ensemble_path, window_lo, window_hi);
        }
        if (pr->parsed()) return cmd_preset(preset_action, preset_name, preset_out);
    } catch (const sinn::Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
