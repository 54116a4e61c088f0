#include "autocenet/experiment.hpp"

#include <sstream>

namespace autocenet {

namespace {

Dims3 dims_of(const std::vector<std::size_t>& v, const char* key) {
    if (v.size() != 3) throw ConfigError(std::string(key) + " needs three comma-separated values");
    return {v[0], v[1], v[2]};
}

Spacing3 spacing_of(const std::vector<double>& v, const char* key) {
    if (v.size() != 3) throw ConfigError(std::string(key) + " needs three comma-separated values");
    for (double s : v) {
        if (!(s > 0.0)) throw ConfigError(std::string(key) + " values must be positive");
    }
    return {v[0], v[1], v[2]};
}

template <typename T>
std::string list(const T& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        if constexpr (std::is_floating_point_v<typename T::value_type>) {
            out += format_double(v[i]);
        } else {
            out += std::to_string(v[i]);
        }
    }
    return out;
}

SubsetPolicy parse_policy(const std::string& name) {
    if (name == "nested") return SubsetPolicy::nested;
    if (name == "disjoint") return SubsetPolicy::disjoint;
    throw ConfigError("unknown xval.policy '" + name + "' (expected nested or disjoint)");
}

}  // namespace

ExperimentConfig experiment_from(const ConfigFile& f, std::optional<std::string> ablation,
                                 std::optional<std::uint64_t> seed) {
    ExperimentConfig e;
    const auto file_seed = static_cast<std::uint64_t>(f.get_size("seed", 0));
    e.seed = seed ? *seed : file_seed;

    const auto preset = f.get_string("network.preset", "desk");
    if (preset == "desk") {
        e.network = NetworkConfig::desk();
    } else if (preset == "paper") {
        e.network = NetworkConfig{};
    } else {
        throw ConfigError("unknown network.preset '" + preset + "' (expected desk or paper)");
    }
    const auto ablation_name = f.get_string("network.ablation", "none");
    e.ablation = parse_ablation(ablation ? *ablation : ablation_name);
    e.network = apply_ablation(e.network, e.ablation);

    auto& n = e.network;
    if (f.contains("network.dims")) n.input_dims = dims_of(f.get_sizes("network.dims", {}), "network.dims");
    n.base_width = f.get_size("network.base_width", n.base_width);
    n.context_width = f.get_size("network.context_width", n.context_width);
    n.prior_width = f.get_size("network.prior_width", n.prior_width);
    n.contour_width = f.get_size("network.contour_width", n.contour_width);
    n.fusion_width = f.get_size("network.fusion_width", n.fusion_width);
    n.prior_up_width = f.get_size("network.prior_up_width", n.prior_up_width);
    n.sequential_prior_width = f.get_size("network.sequential_prior_width", n.sequential_prior_width);
    n.groups = f.get_size("network.groups", n.groups);
    n.stem_stages = f.get_size("network.stem_stages", n.stem_stages);
    n.lower_stages = f.get_size("network.lower_stages", n.lower_stages);
    n.disable_attention = f.get_bool("network.disable_attention", n.disable_attention);
    n.disable_autocontext = f.get_bool("network.disable_autocontext", n.disable_autocontext);
    n.disable_residual_prior = f.get_bool("network.disable_residual_prior", n.disable_residual_prior);
    if (f.contains("network.contour_mode")) {
        n.contour_mode = parse_contour_mode(f.get_string("network.contour_mode", ""));
    }
    n.contour_in_fusion = f.get_bool("network.contour_in_fusion", n.contour_in_fusion);

    auto& t = e.train;
    t.seed = e.seed;
    t.lr = f.get_double("train.lr", t.lr);
    t.batch_size = f.get_size("train.batch_size", t.batch_size);
    t.iterations = f.get_size("train.iterations", t.iterations);
    t.lr_decay = f.get_double("train.lr_decay", t.lr_decay);
    t.decay_every_epochs = f.get_size("train.decay_every_epochs", t.decay_every_epochs);
    t.augment_probability = f.get_double("train.augment_probability", t.augment_probability);
    t.optimizer.kind = parse_optimizer_kind(f.get_string("train.optimizer", "radam"));
    t.optimizer.beta1 = f.get_double("train.beta1", t.optimizer.beta1);
    t.optimizer.beta2 = f.get_double("train.beta2", t.optimizer.beta2);
    t.optimizer.eps = f.get_double("train.eps", t.optimizer.eps);
    t.checkpoint_every = f.get_size("train.checkpoint_every", t.checkpoint_every);
    t.recalibrate_batch_norm = f.get_bool("train.recalibrate_batch_norm", t.recalibrate_batch_norm);

    t.affine.max_rotation_deg = f.get_double("augment.max_rotation_deg", t.affine.max_rotation_deg);
    t.affine.min_scale = f.get_double("augment.min_scale", t.affine.min_scale);
    t.affine.max_scale = f.get_double("augment.max_scale", t.affine.max_scale);
    t.affine.max_translation = f.get_double("augment.max_translation", t.affine.max_translation);
    if (!(t.affine.min_scale > 0.0 && t.affine.min_scale <= t.affine.max_scale)) {
        throw ConfigError("augment scale range must satisfy 0 < min_scale <= max_scale");
    }
    if (!(t.affine.max_rotation_deg >= 0.0 && t.affine.max_translation >= 0.0)) {
        throw ConfigError("augment rotation and translation ranges must be non-negative");
    }

    auto& l = t.loss;
    l.alpha = f.get_double("loss.alpha", l.alpha);
    l.beta = f.get_double("loss.beta", l.beta);
    l.gamma = f.get_double("loss.gamma", l.gamma);
    l.w0 = f.get_double("loss.w0", l.w0);
    l.w1 = f.get_double("loss.w1", l.w1);
    l.manual_threshold = f.get_double("loss.manual_threshold", l.manual_threshold);
    n.manual_threshold = l.manual_threshold;

    e.cases = f.get_size("data.cases", e.cases);
    e.validation_cases = f.get_size("data.validation_cases", e.validation_cases);
    e.data_seed = static_cast<std::uint64_t>(f.get_size("data.seed", e.seed));
    if (f.contains("data.spacing")) e.spacing = spacing_of(f.get_doubles("data.spacing", {}), "data.spacing");
    e.data_dir = f.get_string("data.dir", "");
    e.validation_dir = f.get_string("data.validation_dir", "");

    auto& x = e.xval;
    x.fractions = f.get_doubles("xval.fractions", x.fractions);
    {
        std::vector<std::size_t> fallback(x.seeds.begin(), x.seeds.end());
        const auto seeds = f.get_sizes("xval.seeds", fallback);
        x.seeds.assign(seeds.begin(), seeds.end());
    }
    x.policy = parse_policy(f.get_string("xval.policy", "nested"));
    x.test_fraction = f.get_double("xval.test_fraction", x.test_fraction);
    e.xval_cases = f.get_size("xval.cases", e.xval_cases);

    const auto unused = f.unused_keys();
    if (!unused.empty()) {
        std::string msg = "unknown config key";
        msg += unused.size() > 1 ? "s:" : ":";
        for (const auto& k : unused) msg += " " + k;
        throw ConfigError(msg);
    }
    if (e.cases == 0) throw ConfigError("data.cases must be at least 1");
    if (x.fractions.empty() || x.seeds.empty()) throw ConfigError("xval.fractions and xval.seeds must be non-empty");
    for (double fr : x.fractions) {
        if (!(fr > 0.0 && fr <= 1.0)) throw ConfigError("xval.fractions must lie in (0, 1]");
    }
    if (!(x.test_fraction > 0.0 && x.test_fraction < 1.0)) throw ConfigError("xval.test_fraction must lie in (0, 1)");
    n.validate();
    t.validate();
    return e;
}

std::string describe(const ExperimentConfig& e) {
    const auto& n = e.network;
    const auto& t = e.train;
    std::ostringstream o;
    o << "seed=" << e.seed << "\n"
      << "network.ablation=" << to_string(e.ablation) << "\n"
      << "network.dims=" << list(n.input_dims) << "\n"
      << "network.base_width=" << n.base_width << "\n"
      << "network.context_width=" << n.context_width << "\n"
      << "network.prior_width=" << n.prior_width << "\n"
      << "network.contour_width=" << n.contour_width << "\n"
      << "network.fusion_width=" << n.fusion_width << "\n"
      << "network.prior_up_width=" << n.prior_up_width << "\n"
      << "network.sequential_prior_width=" << n.sequential_prior_width << "\n"
      << "network.groups=" << n.groups << "\n"
      << "network.stem_stages=" << n.stem_stages << "\n"
      << "network.lower_stages=" << n.lower_stages << "\n"
      << "network.disable_attention=" << (n.disable_attention ? "true" : "false") << "\n"
      << "network.disable_autocontext=" << (n.disable_autocontext ? "true" : "false") << "\n"
      << "network.disable_residual_prior=" << (n.disable_residual_prior ? "true" : "false") << "\n"
      << "network.contour_mode=" << to_string(n.contour_mode) << "\n"
      << "network.contour_in_fusion=" << (n.contour_in_fusion ? "true" : "false") << "\n"
      << "train.lr=" << format_double(t.lr) << "\n"
      << "train.batch_size=" << t.batch_size << "\n"
      << "train.iterations=" << t.iterations << "\n"
      << "train.lr_decay=" << format_double(t.lr_decay) << "\n"
      << "train.decay_every_epochs=" << t.decay_every_epochs << "\n"
      << "train.augment_probability=" << format_double(t.augment_probability) << "\n"
      << "train.optimizer=" << (t.optimizer.kind == OptimizerKind::radam ? "radam" : "adam") << "\n"
      << "train.beta1=" << format_double(t.optimizer.beta1) << "\n"
      << "train.beta2=" << format_double(t.optimizer.beta2) << "\n"
      << "train.eps=" << format_double(t.optimizer.eps) << "\n"
      << "train.checkpoint_every=" << t.checkpoint_every << "\n"
      << "train.recalibrate_batch_norm=" << (t.recalibrate_batch_norm ? "true" : "false") << "\n"
      << "augment.max_rotation_deg=" << format_double(t.affine.max_rotation_deg) << "\n"
      << "augment.min_scale=" << format_double(t.affine.min_scale) << "\n"
      << "augment.max_scale=" << format_double(t.affine.max_scale) << "\n"
      << "augment.max_translation=" << format_double(t.affine.max_translation) << "\n"
      << "loss.alpha=" << format_double(t.loss.alpha) << "\n"
      << "loss.beta=" << format_double(t.loss.beta) << "\n"
      << "loss.gamma=" << format_double(t.loss.gamma) << "\n"
      << "loss.w0=" << format_double(t.loss.w0) << "\n"
      << "loss.w1=" << format_double(t.loss.w1) << "\n"
      << "loss.manual_threshold=" << format_double(t.loss.manual_threshold) << "\n"
      << "data.cases=" << e.cases << "\n"
      << "data.validation_cases=" << e.validation_cases << "\n"
      << "data.seed=" << e.data_seed << "\n"
      << "data.spacing=" << list(e.spacing) << "\n";
    if (!e.data_dir.empty()) o << "data.dir=" << e.data_dir.string() << "\n";
    if (!e.validation_dir.empty()) o << "data.validation_dir=" << e.validation_dir.string() << "\n";
    o << "xval.fractions=" << list(e.xval.fractions) << "\n"
      << "xval.seeds=" << list(e.xval.seeds) << "\n"
      << "xval.policy=" << (e.xval.policy == SubsetPolicy::nested ? "nested" : "disjoint") << "\n"
      << "xval.test_fraction=" << format_double(e.xval.test_fraction) << "\n"
      << "xval.cases=" << e.xval_cases << "\n";
    return o.str();
}

Dataset training_cases(const ExperimentConfig& e) {
    if (!e.data_dir.empty()) return load_dataset(e.data_dir, e.network.input_dims);
    return make_phantom_dataset(e.cases, e.data_seed, e.network.input_dims, e.spacing);
}

Dataset validation_cases(const ExperimentConfig& e) {
    if (!e.validation_dir.empty()) return load_dataset(e.validation_dir, e.network.input_dims);
    if (e.validation_cases == 0) return {};
    auto cases = make_phantom_dataset(e.validation_cases, e.data_seed + 1, e.network.input_dims, e.spacing);
    for (auto& c : cases) c.id = "val_" + c.id;
    return cases;
}

}  // namespace autocenet
