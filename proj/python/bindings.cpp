#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "autocenet/checkpoint.hpp"
#include "autocenet/experiment.hpp"
#include "autocenet/gradcheck.hpp"
#include "autocenet/trainer.hpp"

namespace py = pybind11;
using namespace autocenet;

namespace {

using FArray = py::array_t<float, py::array::f_style | py::array::forcecast>;
using LArray = py::array_t<std::uint8_t, py::array::f_style | py::array::forcecast>;

Dims3 dims_of(const py::array& a) {
    if (a.ndim() != 3) throw DimensionError("expected a 3-d array indexed [x, y, z]");
    return {static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
            static_cast<std::size_t>(a.shape(2))};
}

template <typename V, typename Array>
Grid<V> to_grid(const Array& a, const Spacing3& spacing) {
    Grid<V> g(dims_of(a), spacing);
    std::copy_n(a.data(), g.size(), g.values().begin());
    return g;
}

template <typename V>
py::array_t<V> to_array(const Grid<V>& g) {
    const auto& d = g.dims();
    const auto s = static_cast<py::ssize_t>(sizeof(V));
    py::array_t<V> out({d[0], d[1], d[2]}, {s, s * py::ssize_t(d[0]), s * py::ssize_t(d[0] * d[1])});
    std::copy(g.values().begin(), g.values().end(), out.mutable_data());
    return out;
}

py::dict report_dict(const MetricsReport& r) {
    py::dict d;
    d["dsc"] = r.dsc;
    d["precision"] = r.precision;
    d["sensitivity"] = r.sensitivity;
    d["hd"] = r.hd ? py::cast(*r.hd) : py::none();
    d["hd95"] = r.hd95 ? py::cast(*r.hd95) : py::none();
    d["assd"] = r.assd ? py::cast(*r.assd) : py::none();
    d["tp"] = r.tp;
    d["fp"] = r.fp;
    d["fn"] = r.fn;
    return d;
}

Dataset cases_from(const std::vector<FArray>& images, const std::vector<LArray>& labels, const Spacing3& spacing) {
    if (images.size() != labels.size()) throw DimensionError("images and labels differ in count");
    Dataset data;
    for (std::size_t i = 0; i < images.size(); ++i)
        data.push_back({case_id(i), to_grid<float>(images[i], spacing), to_grid<std::uint8_t>(labels[i], spacing)});
    return data;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Auto-context liver segmentation network";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);

    m.def("ablations", [] {
        std::vector<std::string> names;
        for (auto a : all_ablations()) names.push_back(to_string(a));
        return names;
    });

    m.def(
        "make_phantom",
        [](std::uint64_t seed, const Dims3& dims, const Spacing3& spacing) {
            const auto p = make_phantom(seed, dims, spacing);
            return py::make_tuple(to_array(p.image), to_array(p.label));
        },
        py::arg("seed"), py::arg("dims") = Dims3{32, 32, 16}, py::arg("spacing") = Spacing3{1.0, 1.0, 2.0},
        "Synthetic CT phantom (Hounsfield units) and its label, both indexed [x, y, z].");

    m.def(
        "window_normalize",
        [](const FArray& image, double level, double width) {
            return to_array(window_normalize(to_grid<float>(image, {1, 1, 1}), {level, width}));
        },
        py::arg("image"), py::arg("level") = Window{}.level, py::arg("width") = Window{}.width);

    m.def(
        "read_volume",
        [](const std::filesystem::path& path) -> py::tuple {
            const auto any = read_any_volume(path);
            return std::visit([](const auto& g) -> py::tuple { return py::make_tuple(to_array(g), g.spacing()); }, any);
        },
        py::arg("path"), "Returns (array, spacing).");
    m.def(
        "write_volume",
        [](const std::filesystem::path& path, const py::array& a, const Spacing3& spacing) {
            if (a.dtype().is(py::dtype::of<std::uint8_t>()))
                write_volume(to_grid<std::uint8_t>(LArray::ensure(a), spacing), path);
            else
                write_volume(to_grid<float>(FArray::ensure(a), spacing), path);
        },
        py::arg("path"), py::arg("array"), py::arg("spacing") = Spacing3{1, 1, 1},
        "uint8 arrays are written as labels, anything else as float images.");

    m.def(
        "evaluate",
        [](const LArray& pred, const LArray& gt, const Spacing3& spacing, bool brute_force) {
            return report_dict(evaluate(to_grid<std::uint8_t>(pred, spacing), to_grid<std::uint8_t>(gt, spacing),
                                        brute_force ? DistanceMode::brute_force : DistanceMode::accelerated));
        },
        py::arg("pred"), py::arg("gt"), py::arg("spacing") = Spacing3{1, 1, 1}, py::arg("brute_force") = false);
    m.def("f1_from", &f1_from, py::arg("precision"), py::arg("sensitivity"));
    m.def("relative_reduction", &relative_reduction, py::arg("before"), py::arg("after"));

    m.def(
        "gradient_suite",
        [](std::uint64_t seed, std::size_t coordinates) {
            GradCheckOptions o;
            o.coordinates = coordinates;
            py::list out;
            for (const auto& r : run_gradient_suite(seed, o)) {
                py::dict d;
                d["name"] = r.name;
                d["passed"] = r.passed();
                d["coordinates"] = r.coordinates;
                d["max_rel_error"] = r.max_rel_error;
                out.append(d);
            }
            return out;
        },
        py::arg("seed") = 1, py::arg("coordinates") = 20);

    py::class_<Network>(m, "Network")
        .def(py::init([](const std::string& ablation, std::uint64_t seed, const std::string& preset,
                         std::optional<Dims3> dims) {
                 if (preset != "paper" && preset != "desk") throw ConfigError("unknown preset '" + preset + "'");
                 auto cfg = preset == "paper" ? NetworkConfig{} : NetworkConfig::desk();
                 if (dims) cfg.input_dims = *dims;
                 return Network(apply_ablation(cfg, parse_ablation(ablation)), seed);
             }),
             py::arg("ablation") = "none", py::arg("seed") = 0, py::arg("preset") = "desk",
             py::arg("dims") = py::none())
        .def_property_readonly("parameter_count", &Network::parameter_count)
        .def_property_readonly("input_dims", [](const Network& n) { return n.config().input_dims; })
        .def(
            "predict",
            [](Network& n, const FArray& image, const Spacing3& spacing) {
                return to_array(n.predict(to_grid<float>(image, spacing)));
            },
            py::arg("image"), py::arg("spacing") = Spacing3{1, 1, 1},
            "Binary label of a window-normalized image.")
        .def(
            "train",
            [](Network& n, const std::vector<FArray>& images, const std::vector<LArray>& labels, std::size_t iterations,
               std::uint64_t seed, double augment_probability, double lr) {
                TrainConfig tc;
                tc.iterations = iterations;
                tc.seed = seed;
                tc.augment_probability = augment_probability;
                tc.lr = lr;
                const auto data = cases_from(images, labels, {1, 1, 1});
                RunRecord r;
                {
                    py::gil_scoped_release release;
                    r = train(n, data, tc);
                }
                std::vector<double> losses;
                for (const auto& it : r.iterations) losses.push_back(it.total);
                return losses;
            },
            py::arg("images"), py::arg("labels"), py::arg("iterations") = 20, py::arg("seed") = 0,
            py::arg("augment_probability") = 0.8, py::arg("lr") = 1e-3, "Trains in place; returns per-iteration total loss.")
        .def("save", [](Network& n, const std::filesystem::path& p) { save_checkpoint(network_state(n), p); })
        .def("load", [](Network& n, const std::filesystem::path& p) { load_network_state(n, load_checkpoint(p)); },
             "Loads weights from a network or training checkpoint.");
}
