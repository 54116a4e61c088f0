#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "autocenet/config.hpp"
#include "autocenet/trainer.hpp"

namespace autocenet {

/// Everything a CLI run needs, resolved from a config file.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    Ablation ablation = Ablation::none;
    NetworkConfig network = NetworkConfig::desk();
    TrainConfig train;

    /// Phantom sets generated on the fly when no data directory is given.
    std::size_t cases = 2;
    /// Extra phantoms (set seed data_seed + 1) used for model selection.
    std::size_t validation_cases = 0;
    std::uint64_t data_seed = 0;
    Spacing3 spacing{1.0, 1.0, 2.0};
    std::filesystem::path data_dir;
    std::filesystem::path validation_dir;

    XvalOptions xval;
    std::size_t xval_cases = 20;
};

/// Keys:
///   seed
///   network.preset (desk|paper), network.ablation, network.dims,
///   network.{base,context,prior,contour,fusion,prior_up,sequential_prior}_width,
///   network.groups, network.stem_stages, network.lower_stages,
///   network.disable_attention, network.disable_autocontext,
///   network.disable_residual_prior, network.contour_mode, network.contour_in_fusion
///   train.lr, train.batch_size, train.iterations, train.lr_decay,
///   train.decay_every_epochs, train.augment_probability, train.optimizer (radam|adam),
///   train.beta1, train.beta2, train.eps, train.checkpoint_every, train.recalibrate_batch_norm
///   augment.max_rotation_deg, augment.min_scale, augment.max_scale, augment.max_translation
///   loss.alpha, loss.beta, loss.gamma, loss.w0, loss.w1, loss.manual_threshold
///   data.cases, data.validation_cases, data.seed, data.spacing, data.dir, data.validation_dir
///   xval.fractions, xval.seeds, xval.policy (nested|disjoint), xval.test_fraction, xval.cases
/// Unknown keys and invalid values raise ConfigError. A given `ablation`
/// overrides network.ablation; a given `seed` overrides the file's seed.
ExperimentConfig experiment_from(const ConfigFile& file, std::optional<std::string> ablation = std::nullopt,
                                 std::optional<std::uint64_t> seed = std::nullopt);

/// Key=value lines that reproduce `config` when parsed again.
std::string describe(const ExperimentConfig& config);

/// Training cases: `data.dir` when set, phantoms otherwise.
Dataset training_cases(const ExperimentConfig& config);
/// Validation cases: `data.validation_dir`, generated phantoms, or none.
Dataset validation_cases(const ExperimentConfig& config);

}  // namespace autocenet
