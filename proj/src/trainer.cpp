#include "autocenet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace autocenet {

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size must be at least 1");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("train.lr_decay must lie in (0, 1]");
    if (decay_every_epochs == 0) throw ConfigError("train.decay_every_epochs must be positive");
    if (!(augment_probability >= 0.0 && augment_probability <= 1.0)) {
        throw ConfigError("train.augment_probability must lie in [0, 1]");
    }
    loss.validate();
    optimizer.validate();
}

LossBreakdown compute_losses(const NetworkOutputs& out, const Tensor& label, const Tensor& label_down,
                             const Tensor& contour, const NetworkConfig& net, const LossWeights& weights,
                             const std::vector<ParameterRef<float>>& params) {
    LossBreakdown l;
    auto fg = select_channel(channel_softmax(out.final_logits), 1);
    l.final_loss = soft_dice_loss(fg, label);
    if (net.prior_supervised()) l.prior_loss = liver_prior_loss(out.prior_residual_logits, label_down);
    if (net.has_contour_branch() && out.contour_logits.defined()) {
        auto contour_probs = select_channel(channel_softmax(out.contour_logits), 1);
        const auto fg_data = fg.detach();
        switch (net.contour_mode) {
            case ContourMode::self_supervised:
                l.contour_loss = penalized_contour_loss(contour_probs, contour, contour_weight_map(contour, fg_data),
                                                        weights.w0, weights.w1);
                break;
            case ContourMode::full:
                l.contour_loss = full_contour_loss(contour_probs, contour, weights.w0, weights.w1);
                break;
            case ContourMode::manual:
                l.contour_loss = manual_selfsup_contour_loss(contour_probs, contour, fg_data, net.manual_threshold,
                                                             weights.w0, weights.w1);
                break;
            case ContourMode::off: break;
        }
    }
    l.total = total_loss(l.final_loss, l.prior_loss, l.contour_loss, weights, params);
    return l;
}

namespace {

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b),    tag};
    return std::mt19937_64(seq);
}

bool all_finite(std::span<const float> v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

double value_or_zero(const Tensor& t) { return t.defined() ? t.item() : 0.0; }

}  // namespace

Trainer::Trainer(Network& network, Dataset train, TrainConfig config, Dataset validation)
    : network_(network),
      train_(std::move(train)),
      validation_(std::move(validation)),
      config_((config.validate(), std::move(config))),
      params_(network.parameters()),
      optimizer_(params_, config_.optimizer) {
    if (train_.empty()) throw DataError("training set is empty");
    const auto& dims = network_.config().input_dims;
    for (const auto& c : train_) {
        if (c.image.dims() != dims || c.label.dims() != dims) {
            throw DimensionError("case " + c.id + " does not match the network input dims");
        }
    }
}

double Trainer::current_lr() const {
    return scheduled_lr(config_.lr, config_.lr_decay, config_.decay_every_epochs,
                        epoch_of_sample(iteration_ * config_.batch_size));
}

const Case& Trainer::sample_case(std::size_t sample) {
    const std::size_t epoch = epoch_of_sample(sample);
    if (epoch != order_epoch_) {
        order_.resize(train_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        auto rng = stream_rng(config_.seed, epoch, 0, 0x5eed);
        std::shuffle(order_.begin(), order_.end(), rng);
        order_epoch_ = epoch;
    }
    return train_[order_[sample % train_.size()]];
}

IterationRecord Trainer::step() {
    const std::size_t batch = config_.batch_size;
    const std::size_t first = iteration_ * batch;
    IterationRecord rec;
    rec.iteration = iteration_ + 1;
    rec.epoch = epoch_of_sample(first);
    rec.lr = current_lr();

    optimizer_.zero_grad();
    for (std::size_t micro = 0; micro < batch; ++micro) {
        const Case& c = sample_case(first + micro);
        auto rng = stream_rng(config_.seed, iteration_, micro, 0xa11);
        auto aug = random_affine(c.image, c.label, rng, config_.augment_probability, config_.affine);
        const auto x = to_tensor<float>(aug.image);
        const auto y = to_tensor<float>(aug.label);
        const auto y_down = to_tensor<float>(downsample_max2(aug.label));
        const auto contour = to_tensor<float>(extract_contour(aug.label).mask);

        auto out = network_.forward(x, Mode::train);
        auto losses = compute_losses(out, y, y_down, contour, network_.config(), config_.loss, params_);
        if (!std::isfinite(losses.total.item())) {
            numeric_failure(c, aug.image, aug.label,
                            "non-finite loss (L_f=" + std::to_string(value_or_zero(losses.final_loss)) +
                                ", L_p=" + std::to_string(value_or_zero(losses.prior_loss)) +
                                ", L_C=" + std::to_string(value_or_zero(losses.contour_loss)) + ")");
        }
        backward(batch > 1 ? scale(losses.total, 1.0f / static_cast<float>(batch)) : losses.total);

        const double w = 1.0 / static_cast<double>(batch);
        rec.total += w * losses.total.item();
        rec.final_loss += w * losses.final_loss.item();
        rec.prior_loss += w * value_or_zero(losses.prior_loss);
        rec.contour_loss += w * value_or_zero(losses.contour_loss);
    }
    optimizer_.step(rec.lr);
    for (const auto& p : params_) {
        if (!all_finite(p.tensor.data())) {
            const Case& c = sample_case(first);
            numeric_failure(c, c.image, c.label, "parameter '" + p.name + "' became non-finite");
        }
    }
    ++iteration_;
    record_.iterations.push_back(rec);

    const std::size_t next_epoch = epoch_of_sample(iteration_ * batch);
    for (std::size_t e = rec.epoch; e < next_epoch; ++e) end_of_epoch(e);
    if (config_.checkpoint_every > 0 && !config_.checkpoint_dir.empty() &&
        iteration_ % config_.checkpoint_every == 0) {
        std::filesystem::create_directories(config_.checkpoint_dir);
        save_checkpoint(checkpoint(), config_.checkpoint_dir / ("iter_" + std::to_string(iteration_) + ".ckpt"));
    }
    return rec;
}

void Trainer::end_of_epoch(std::size_t epoch) {
    if (validation_.empty()) return;
    if (config_.recalibrate_batch_norm) recalibrate_batch_norm(network_, train_);
    const double dsc = mean_dice(network_, validation_);
    record_.validation.push_back({epoch, dsc});
    if (!record_.best_epoch || dsc > record_.best_validation_dsc) {
        record_.best_epoch = epoch;
        record_.best_validation_dsc = dsc;
        if (!config_.checkpoint_dir.empty()) {
            std::filesystem::create_directories(config_.checkpoint_dir);
            save_checkpoint(checkpoint(), config_.checkpoint_dir / "best.ckpt");
        }
    }
}

RunRecord Trainer::run() {
    const auto start = std::chrono::steady_clock::now();
    while (iteration_ < config_.iterations) step();
    if (config_.recalibrate_batch_norm) recalibrate_batch_norm(network_, train_);
    record_.wall_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return record_;
}

std::vector<NamedArray> Trainer::checkpoint() {
    auto blobs = network_state(network_);
    for (auto& b : optimizer_.state()) blobs.push_back(std::move(b));
    blobs.push_back(counter_blob("train.iteration", iteration_));
    return blobs;
}

void Trainer::restore(const std::vector<NamedArray>& blobs) {
    load_network_state(network_, blobs);
    optimizer_.load_state(blobs);
    iteration_ = counter_from_blob(find_blob(blobs, "train.iteration"));
    order_epoch_ = static_cast<std::size_t>(-1);
}

void Trainer::numeric_failure(const Case& c, const Volume& image, const LabelVolume& label, const std::string& what) {
    std::string msg = "iteration " + std::to_string(iteration_ + 1) + ", case " + c.id + ": " + what;
    if (!config_.checkpoint_dir.empty()) {
        const auto dir = config_.checkpoint_dir / "numeric_failure";
        std::filesystem::create_directories(dir);
        write_volume(image, dir / (c.id + "_image.vol"));
        write_volume(label, dir / (c.id + "_label.vol"));
        msg += "; offending sample written to " + dir.string();
    }
    throw NumericError(msg);
}

void recalibrate_batch_norm(Network& network, const Dataset& cases) {
    if (cases.empty()) throw DataError("batch-norm recalibration needs at least one case");
    auto buffers = network.buffers();
    std::vector<double> momenta;
    for (const auto& b : buffers) momenta.push_back(b.stats->momentum);
    NoGradGuard no_grad;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        // Momentum 1/(i+1) turns the exponential update into a running mean.
        for (auto& b : buffers) b.stats->momentum = 1.0 / static_cast<double>(i + 1);
        network.forward(to_tensor<float>(cases[i].image), Mode::train);
    }
    for (std::size_t i = 0; i < buffers.size(); ++i) buffers[i].stats->momentum = momenta[i];
}

RunRecord train(Network& network, const Dataset& train_set, const TrainConfig& config, const Dataset& validation) {
    Trainer trainer(network, train_set, config, validation);
    return trainer.run();
}

EvaluationResult evaluate_run(Network& network, const Dataset& cases, DistanceMode mode) {
    EvaluationResult result;
    double loss_sum = 0;
    std::size_t loss_count = 0;
    for (const auto& c : cases) {
        try {
            NoGradGuard no_grad;
            auto logits = network.forward(to_tensor<float>(c.image), Mode::eval).final_logits;
            auto pred = labels_from_logits(logits, 0, c.image.spacing());
            const auto loss = soft_dice_loss(select_channel(channel_softmax(logits), 1), to_tensor<float>(c.label));
            if (!std::isfinite(loss.item())) throw NumericError("non-finite prediction for case " + c.id);
            result.cases.push_back({c.id, evaluate(pred, c.label, mode)});
            result.predictions.push_back(std::move(pred));
            loss_sum += loss.item();
            ++loss_count;
        } catch (const Error& e) {
            result.failures.push_back({c.id, e.what()});
        }
    }
    result.aggregate = aggregate(result.cases);
    result.mean_dice_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    return result;
}

double mean_dice(Network& network, const Dataset& cases) {
    if (cases.empty()) throw DataError("mean_dice: no cases");
    double total = 0;
    for (const auto& c : cases) {
        const auto counts = confusion_counts(network.predict(c.image), c.label);
        total += f1_precision_sensitivity(counts.tp, counts.fp, counts.fn).f1;
    }
    return total / static_cast<double>(cases.size());
}

XvalResult nfold_study(const Dataset& data, const XvalOptions& options, const NetworkConfig& net_config,
                       const TrainConfig& train_config) {
    if (options.seeds.empty()) throw ConfigError("xval needs at least one seed");
    XvalResult result;
    FoldOptions fold_options;
    fold_options.mode = FoldMode::nfold_fractions;
    fold_options.fractions = options.fractions;
    fold_options.policy = options.policy;
    fold_options.test_fraction = options.test_fraction;
    const auto ids = case_ids(data);

    for (auto seed : options.seeds) {
        auto plan = plan_folds(ids, seed, fold_options);
        const auto test = select_cases(data, plan.test);
        for (std::size_t f = 0; f < plan.fractions.size(); ++f) {
            const auto& split = plan.fractions[f];
            const auto start = std::chrono::steady_clock::now();
            Network net(net_config, seed * 7919 + f);
            TrainConfig tc = train_config;
            tc.seed = seed;
            tc.checkpoint_dir.clear();
            train(net, select_cases(data, split.train), tc);
            const auto eval = evaluate_run(net, test);
            XvalRun run;
            run.seed = seed;
            run.fraction = split.fraction;
            run.train_cases = split.train.size();
            run.test_dice_loss = eval.mean_dice_loss;
            run.test_dsc = eval.aggregate.dsc.mean;
            run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            result.runs.push_back(run);
        }
        result.plans.push_back(std::move(plan));
    }
    for (double fraction : options.fractions) {
        std::vector<double> losses, dscs;
        for (const auto& r : result.runs) {
            if (r.fraction == fraction) {
                losses.push_back(r.test_dice_loss);
                dscs.push_back(r.test_dsc);
            }
        }
        result.curve.push_back({fraction, mean_std(losses), mean_std(dscs)});
    }
    return result;
}

void write_xval_runs_csv(std::ostream& out, const XvalResult& result) {
    out << "seed,fraction,train_cases,test_dice_loss,test_dsc,seconds\n";
    for (const auto& r : result.runs) {
        out << r.seed << ',' << format_double(r.fraction) << ',' << r.train_cases << ','
            << format_double(r.test_dice_loss) << ',' << format_double(r.test_dsc) << ',' << format_double(r.seconds)
            << '\n';
    }
}

void write_xval_curve_csv(std::ostream& out, const XvalResult& result) {
    out << "fraction,dice_loss_mean,dice_loss_std,dsc_mean,dsc_std,runs\n";
    for (const auto& p : result.curve) {
        out << format_double(p.fraction) << ',' << format_double(p.dice_loss.mean) << ','
            << format_double(p.dice_loss.std) << ',' << format_double(p.dsc.mean) << ',' << format_double(p.dsc.std)
            << ',' << p.dice_loss.count << '\n';
    }
}

void write_run_record_csv(std::ostream& out, const RunRecord& record) {
    out << "iteration,epoch,lr,loss,loss_final,loss_prior,loss_contour\n";
    for (const auto& r : record.iterations) {
        out << r.iteration << ',' << r.epoch << ',' << format_double(r.lr) << ',' << format_double(r.total) << ','
            << format_double(r.final_loss) << ',' << format_double(r.prior_loss) << ','
            << format_double(r.contour_loss) << '\n';
    }
}

}  // namespace autocenet
