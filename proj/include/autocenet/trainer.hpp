#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "autocenet/dataset.hpp"
#include "autocenet/losses.hpp"
#include "autocenet/metrics.hpp"
#include "autocenet/network.hpp"
#include "autocenet/optimizer.hpp"

namespace autocenet {

struct TrainConfig {
    double lr = 1e-3;
    /// Samples accumulated per optimizer step.
    std::size_t batch_size = 1;
    /// Optimizer steps.
    std::size_t iterations = 300;
    double lr_decay = 0.5;
    std::size_t decay_every_epochs = 10;
    double augment_probability = 0.8;
    AffineRanges affine;
    LossWeights loss;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    /// Write `<checkpoint_dir>/iter_<n>.ckpt` every this many iterations (0: never).
    std::size_t checkpoint_every = 0;
    /// Where checkpoints, the best model and numeric-failure dumps go; empty
    /// disables all file output.
    std::filesystem::path checkpoint_dir;
    /// Recompute batch-norm running statistics over the training cases at the
    /// end of the run and before each validation.
    bool recalibrate_batch_norm = true;

    void validate() const;
};

struct IterationRecord {
    std::size_t iteration = 0;  ///< 1-based index of the optimizer step
    std::size_t epoch = 0;
    double lr = 0;
    double total = 0, final_loss = 0, prior_loss = 0, contour_loss = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double validation_dsc = 0;
};

struct RunRecord {
    std::vector<IterationRecord> iterations;
    std::vector<EpochRecord> validation;
    double wall_seconds = 0;
    std::optional<std::size_t> best_epoch;
    double best_validation_dsc = 0;
};

/// Loss values of one forward pass on one sample.
struct LossBreakdown {
    Tensor total, final_loss, prior_loss, contour_loss;
};

/// Builds every loss term of the configured variant from network outputs.
/// The contour weight map (or erased contour) is computed from the detached
/// final foreground probabilities.
LossBreakdown compute_losses(const NetworkOutputs& out, const Tensor& label, const Tensor& label_down,
                             const Tensor& contour, const NetworkConfig& net, const LossWeights& weights,
                             const std::vector<ParameterRef<float>>& params);

/// Stateful training loop. Sample order and augmentation are derived from
/// (seed, epoch) and (seed, iteration), so a run restored from a checkpoint
/// continues exactly like an uninterrupted one.
class Trainer {
public:
    Trainer(Network& network, Dataset train, TrainConfig config, Dataset validation = {});

    /// One optimizer step over `batch_size` samples.
    IterationRecord step();
    /// Steps until `config.iterations` is reached.
    RunRecord run();

    std::size_t iteration() const { return iteration_; }
    double current_lr() const;
    std::size_t epoch_of_sample(std::size_t sample) const { return sample / train_.size(); }

    /// Network parameters and statistics, optimizer state and the iteration.
    std::vector<NamedArray> checkpoint();
    void restore(const std::vector<NamedArray>& blobs);

    const RunRecord& record() const { return record_; }

private:
    const Case& sample_case(std::size_t sample);
    void end_of_epoch(std::size_t epoch);
    [[noreturn]] void numeric_failure(const Case& c, const Volume& image, const LabelVolume& label,
                                      const std::string& what);

    Network& network_;
    Dataset train_;
    Dataset validation_;
    TrainConfig config_;
    std::vector<ParameterRef<float>> params_;
    Optimizer optimizer_;
    std::size_t iteration_ = 0;
    std::size_t order_epoch_ = static_cast<std::size_t>(-1);
    std::vector<std::size_t> order_;
    RunRecord record_;
};

/// Replaces every batch-norm running statistic by the plain average of the
/// per-case batch statistics over `cases` (weights frozen, no augmentation).
void recalibrate_batch_norm(Network& network, const Dataset& cases);

RunRecord train(Network& network, const Dataset& train_set, const TrainConfig& config,
                const Dataset& validation = {});

struct CaseFailure {
    std::string case_id;
    std::string message;
};

struct EvaluationResult {
    std::vector<CaseReport> cases;
    std::vector<CaseFailure> failures;
    AggregateReport aggregate;
    /// Mean soft dice loss of the foreground probabilities.
    double mean_dice_loss = 0;
    std::vector<LabelVolume> predictions;
};

/// Predicts every case and scores it; per-case errors are recorded, not thrown.
EvaluationResult evaluate_run(Network& network, const Dataset& cases, DistanceMode mode = DistanceMode::accelerated);

/// Mean hard dice of the eval-mode predictions.
double mean_dice(Network& network, const Dataset& cases);

struct XvalOptions {
    std::vector<double> fractions{0.1, 0.5, 0.9};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    SubsetPolicy policy = SubsetPolicy::nested;
    double test_fraction = 80.0 / 180.0;
};

struct XvalRun {
    std::uint64_t seed = 0;
    double fraction = 0;
    std::size_t train_cases = 0;
    double test_dice_loss = 0;
    double test_dsc = 0;
    double seconds = 0;
};

struct XvalPoint {
    double fraction = 0;
    MeanStd dice_loss;
    MeanStd dsc;
};

struct XvalResult {
    std::vector<FoldPlan> plans;
    std::vector<XvalRun> runs;
    std::vector<XvalPoint> curve;
};

/// For every seed: plans a fixed test set and per-fraction training subsets,
/// trains a fresh network per fraction and scores the test set.
XvalResult nfold_study(const Dataset& data, const XvalOptions& options, const NetworkConfig& net_config,
                       const TrainConfig& train_config);

void write_xval_runs_csv(std::ostream& out, const XvalResult& result);
void write_xval_curve_csv(std::ostream& out, const XvalResult& result);
void write_run_record_csv(std::ostream& out, const RunRecord& record);

}  // namespace autocenet
