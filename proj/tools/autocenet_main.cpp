#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "autocenet/checkpoint.hpp"
#include "autocenet/experiment.hpp"
#include "autocenet/gradcheck.hpp"
#include "autocenet/imaging.hpp"

namespace fs = std::filesystem;
using namespace autocenet;

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, data_error = 3, numeric_error = 4 };

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::optional<std::string> ablation;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_ablation) {
    cmd->add_option("--config", flags.config, "key=value config file with dotted keys")->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "master seed (overrides the config)");
    cmd->add_option("--out-dir", flags.out_dir, "output directory")->capture_default_str();
    if (with_ablation) {
        cmd->add_option("--ablation", flags.ablation, "variant")
            ->check(CLI::IsMember({"none", "autonet", "att", "A", "R", "AR", "FC", "MC"}));
    }
}

ExperimentConfig resolve(const CommonFlags& flags) {
    const auto file = flags.config.empty() ? ConfigFile{} : ConfigFile::load(flags.config);
    return experiment_from(file, flags.ablation, flags.seed);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) { open_out(path) << text; }

void write_case_slices(const fs::path& dir, const Case& c, const LabelVolume* prediction) {
    fs::create_directories(dir);
    const std::size_t z = c.image.dims()[2] / 2;
    write_pgm(overlay_slice(c.image, c.label, z), dir / (c.id + "_label.pgm"));
    if (prediction) write_pgm(overlay_slice(c.image, *prediction, z), dir / (c.id + "_pred.pgm"));
}

void write_evaluation(const fs::path& out, const Dataset& cases, const EvaluationResult& eval) {
    fs::create_directories(out / "predictions");
    {
        auto f = open_out(out / "metrics.csv");
        write_metrics_csv(f, eval.cases);
    }
    {
        auto f = open_out(out / "aggregate.csv");
        write_aggregate_csv(f, eval.aggregate);
    }
    if (!eval.failures.empty()) {
        auto f = open_out(out / "failures.csv");
        f << "case,message\n";
        for (const auto& x : eval.failures) f << x.case_id << ",\"" << x.message << "\"\n";
    }
    for (std::size_t i = 0; i < eval.cases.size(); ++i) {
        const auto& id = eval.cases[i].case_id;
        write_volume(eval.predictions[i], out / "predictions" / (id + "_pred.vol"));
        for (const auto& c : cases) {
            if (c.id == id) write_case_slices(out / "slices", c, &eval.predictions[i]);
        }
    }
}

int cmd_synth(const CommonFlags& flags) {
    const auto e = resolve(flags);
    const fs::path out = flags.out_dir;
    fs::create_directories(out);
    write_phantom_set(out, e.cases, e.data_seed, e.network.input_dims, e.spacing);
    for (const auto& c : load_dataset(out, e.network.input_dims)) write_case_slices(out / "slices", c, nullptr);
    std::cout << "wrote " << e.cases << " phantoms to " << out.string() << "\n";
    return ok;
}

int cmd_train(const CommonFlags& flags, const std::string& resume) {
    auto e = resolve(flags);
    const fs::path out = flags.out_dir;
    fs::create_directories(out);
    e.train.checkpoint_dir = out / "checkpoints";
    write_text(out / "config.txt", describe(e));

    const auto train_set = training_cases(e);
    const auto validation = validation_cases(e);
    Network net(e.network, e.seed);
    Trainer trainer(net, train_set, e.train, validation);
    if (!resume.empty()) trainer.restore(load_checkpoint(resume));
    std::cout << "training " << to_string(e.ablation) << " (" << net.parameter_count() << " parameters) on "
              << train_set.size() << " cases from iteration " << trainer.iteration() << "\n";
    const auto record = trainer.run();
    save_checkpoint(trainer.checkpoint(), out / "final.ckpt");
    {
        auto f = open_out(out / "loss.csv");
        write_run_record_csv(f, record);
    }
    if (!record.validation.empty()) {
        auto f = open_out(out / "validation.csv");
        f << "epoch,dsc\n";
        for (const auto& v : record.validation) f << v.epoch << ',' << format_double(v.validation_dsc) << '\n';
    }
    const auto eval = evaluate_run(net, train_set);
    write_evaluation(out / "train_eval", train_set, eval);
    std::cout << "final loss " << (record.iterations.empty() ? 0.0 : record.iterations.back().total)
              << ", train DSC " << eval.aggregate.dsc.mean << ", " << record.wall_seconds << " s\n";
    return ok;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint, bool oracle) {
    const auto e = resolve(flags);
    const fs::path out = flags.out_dir;
    fs::create_directories(out);
    Network net(e.network, e.seed);
    load_network_state(net, load_checkpoint(checkpoint));
    const auto cases = e.validation_dir.empty() ? training_cases(e) : validation_cases(e);
    const auto eval = evaluate_run(net, cases, oracle ? DistanceMode::brute_force : DistanceMode::accelerated);
    write_evaluation(out, cases, eval);
    write_aggregate_csv(std::cout, eval.aggregate);
    if (!eval.failures.empty()) {
        std::cerr << eval.failures.size() << " case(s) failed, see failures.csv\n";
        return eval.cases.empty() ? data_error : ok;
    }
    return ok;
}

int cmd_xval(const CommonFlags& flags) {
    const auto e = resolve(flags);
    const fs::path out = flags.out_dir;
    fs::create_directories(out);
    write_text(out / "config.txt", describe(e));
    const auto data = make_phantom_dataset(e.xval_cases, e.data_seed, e.network.input_dims, e.spacing);
    const auto result = nfold_study(data, e.xval, e.network, e.train);
    {
        auto f = open_out(out / "xval_runs.csv");
        write_xval_runs_csv(f, result);
    }
    {
        auto f = open_out(out / "xval_curve.csv");
        write_xval_curve_csv(f, result);
    }
    {
        auto f = open_out(out / "xval_splits.csv");
        f << "seed,fraction,role,case\n";
        for (std::size_t s = 0; s < result.plans.size(); ++s) {
            const auto seed = e.xval.seeds[s];
            for (const auto& id : result.plans[s].test) f << seed << ",,test," << id << '\n';
            for (const auto& split : result.plans[s].fractions) {
                for (const auto& id : split.train) f << seed << ',' << format_double(split.fraction) << ",train," << id << '\n';
            }
        }
    }
    PlotSeries s;
    for (const auto& p : result.curve) {
        s.x.push_back(p.fraction);
        s.y.push_back(p.dice_loss.mean);
        s.error.push_back(p.dice_loss.std);
    }
    write_ppm(render_line_plot({s}), out / "xval_curve.ppm");
    write_xval_curve_csv(std::cout, result);
    return ok;
}

int cmd_metrics(const std::string& pred, const std::string& gt, const std::string& out_dir, bool oracle) {
    const auto p = read_label_volume(pred);
    const auto g = read_label_volume(gt);
    const auto report = evaluate(p, g, oracle ? DistanceMode::brute_force : DistanceMode::accelerated);
    const std::vector<CaseReport> rows{{fs::path(pred).stem().string(), report}};
    write_metrics_csv(std::cout, rows);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        auto f = open_out(fs::path(out_dir) / "metrics.csv");
        write_metrics_csv(f, rows);
    }
    return ok;
}

int cmd_gradcheck(const CommonFlags& flags, std::size_t coordinates) {
    GradCheckOptions options;
    options.coordinates = coordinates;
    const auto results = run_gradient_suite(flags.seed.value_or(1), options);
    fs::create_directories(flags.out_dir);
    auto f = open_out(fs::path(flags.out_dir) / "gradcheck.csv");
    bool all = true;
    f << "name,coordinates,skipped,failures,max_rel_error,max_abs_error\n";
    for (const auto& r : results) {
        f << r.name << ',' << r.coordinates << ',' << r.skipped << ',' << r.failures << ','
          << format_double(r.max_rel_error) << ',' << format_double(r.max_abs_error) << '\n';
        std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << " (" << r.coordinates << " coords, max rel "
                  << r.max_rel_error << ")\n";
        all = all && r.passed();
    }
    return all ? ok : numeric_error;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AutoCENet liver segmentation at desk scale"};
    app.require_subcommand(1);
    CommonFlags flags;

    auto* synth = app.add_subcommand("synth", "generate a phantom set");
    add_common(synth, flags, false);

    std::string resume;
    auto* trn = app.add_subcommand("train", "train a network");
    add_common(trn, flags, true);
    trn->add_option("--resume", resume, "continue from a checkpoint written by train")->check(CLI::ExistingFile);

    std::string checkpoint;
    bool oracle = false;
    auto* ev = app.add_subcommand("eval", "predict and score cases with a trained network");
    add_common(ev, flags, true);
    ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
    ev->add_flag("--oracle", oracle, "brute-force surface distances");

    auto* xv = app.add_subcommand("xval", "multiple N-fold study over training fractions");
    add_common(xv, flags, true);

    std::string pred, gt;
    auto* met = app.add_subcommand("metrics", "score one prediction against ground truth");
    met->add_option("pred", pred, "predicted label .vol")->required()->check(CLI::ExistingFile);
    met->add_option("gt", gt, "ground-truth label .vol")->required()->check(CLI::ExistingFile);
    met->add_option("--out-dir", flags.out_dir, "also write metrics.csv here");
    met->add_flag("--oracle", oracle, "brute-force surface distances");
    met->add_option("--config", flags.config, "unused, accepted for uniformity");
    met->add_option("--seed", flags.seed, "unused, accepted for uniformity");

    std::size_t coordinates = GradCheckOptions{}.coordinates;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    add_common(gc, flags, false);
    gc->add_option("--coordinates", coordinates, "coordinates per checked tensor")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*synth) return cmd_synth(flags);
        if (*trn) return cmd_train(flags, resume);
        if (*ev) return cmd_eval(flags, checkpoint, oracle);
        if (*xv) return cmd_xval(flags);
        if (*met) return cmd_metrics(pred, gt, met->count("--out-dir") ? flags.out_dir : "", oracle);
        if (*gc) return cmd_gradcheck(flags, coordinates);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return config_error;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return numeric_error;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
    return failure;
}
