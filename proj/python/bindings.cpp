#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "aepl/clustering.hpp"
#include "aepl/data.hpp"
#include "aepl/engine.hpp"
#include "aepl/error.hpp"
#include "aepl/promptmodel.hpp"
#include "aepl/report.hpp"

namespace py = pybind11;
using namespace aepl;

namespace {

using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const F64& a) {
    if (a.ndim() != 2) throw DomainError("expected a 2-D array");
    Matrix m(a.shape(0), a.shape(1));
    std::copy(a.data(), a.data() + a.size(), m.data().begin());
    return m;
}

F64 from_matrix(const Matrix& m) {
    F64 out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

template <class T>
py::array_t<T> from_vector(const std::vector<T>& v) {
    py::array_t<T> out(v.size());
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

F32 embeds(const std::vector<float>& v, std::size_t rows, std::size_t cols) {
    F32 out({rows, cols});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

EmbeddingDataset make_dataset(const F32& images, const std::vector<ClassId>& labels, const F32& text,
                              std::vector<std::string> class_names, const std::vector<int>& split) {
    if (images.ndim() != 2 || text.ndim() != 2) throw DomainError("embeddings must be 2-D arrays");
    std::vector<Split> s;
    for (int v : split) {
        if (v != 0 && v != 1) throw DomainError("split values must be 0 (train) or 1 (test)");
        s.push_back(static_cast<Split>(v));
    }
    return EmbeddingDataset(images.shape(0), images.shape(1), std::move(class_names),
                            std::vector<float>(images.data(), images.data() + images.size()), labels,
                            std::vector<float>(text.data(), text.data() + text.size()), std::move(s));
}

py::dict report_dict(const RoundReport& r) {
    py::dict d;
    d["round"] = r.round;
    d["accuracy"] = r.accuracy;
    d["consumed"] = r.consumed;
    d["cum_consumed"] = r.cum_consumed;
    d["cum_budget_ratio"] = r.cum_budget_ratio;
    d["pseudo_count"] = r.pseudo_count;
    d["pseudo_correct"] = r.pseudo_correct;
    d["label_correct"] = r.label_correct;
    d["ari"] = r.ari;
    d["wall_time_s"] = r.wall_time_s;
    return d;
}

}  // namespace

PYBIND11_MODULE(_aepl, m) {
    m.doc() = "Active prompt learning on frozen vision-language embeddings";

    static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", error.ptr());
    py::register_exception<IoError>(m, "IoError", error.ptr());
    py::register_exception<DomainError>(m, "DomainError", error.ptr());
    py::register_exception<DegenerateModelError>(m, "DegenerateModelError", error.ptr());
    py::register_exception<TrainingDivergedError>(m, "TrainingDivergedError", error.ptr());
    py::register_exception<ConsistencyError>(m, "ConsistencyError", error.ptr());
    py::register_exception<RoundError>(m, "RoundError", error.ptr());

    py::class_<EmbeddingDataset>(m, "Dataset")
        .def(py::init(&make_dataset), py::arg("image_embeds"), py::arg("labels"), py::arg("text_embeds"),
             py::arg("class_names"), py::arg("split"))
        .def_property_readonly("n", &EmbeddingDataset::size)
        .def_property_readonly("d", &EmbeddingDataset::dim)
        .def_property_readonly("c", &EmbeddingDataset::num_classes)
        .def_property_readonly("class_names", &EmbeddingDataset::class_names)
        .def_property_readonly("image_embeds",
                               [](const EmbeddingDataset& ds) { return embeds(ds.image_embeds(), ds.size(), ds.dim()); })
        .def_property_readonly("text_embeds", [](const EmbeddingDataset& ds) {
            return embeds(ds.text_embeds(), ds.num_classes(), ds.dim());
        })
        .def_property_readonly("labels", [](const EmbeddingDataset& ds) { return from_vector(ds.ground_truth()); })
        .def_property_readonly("split",
                               [](const EmbeddingDataset& ds) {
                                   std::vector<int> s;
                                   for (Split v : ds.split()) s.push_back(static_cast<int>(v));
                                   return from_vector(s);
                               })
        .def("train_indices", [](const EmbeddingDataset& ds) { return ds.indices(Split::Train); })
        .def("test_indices", [](const EmbeddingDataset& ds) { return ds.indices(Split::Test); })
        .def("__eq__", [](const EmbeddingDataset& a, const EmbeddingDataset& b) { return a == b; })
        .def("__repr__", [](const EmbeddingDataset& ds) {
            return "Dataset(n=" + std::to_string(ds.size()) + ", d=" + std::to_string(ds.dim()) +
                   ", c=" + std::to_string(ds.num_classes()) + ")";
        });

    m.def("load_dataset", [](const std::string& path) { return load_dataset(path); }, py::arg("path"));
    m.def("save_dataset", [](const EmbeddingDataset& ds, const std::string& path) { save_dataset(ds, path); },
          py::arg("dataset"), py::arg("path"));
    m.def(
        "generate_synthetic",
        [](std::size_t classes, std::size_t dim, std::size_t per_class, double spread, double text_noise,
           std::uint64_t seed) { return generate_synthetic({classes, dim, per_class, spread, text_noise, seed}); },
        py::arg("classes") = 10, py::arg("dim") = 16, py::arg("per_class") = 100, py::arg("spread") = 0.05,
        py::arg("text_noise") = 0.05, py::arg("seed") = 1);

    m.def(
        "class_probs",
        [](const F64& weights, const std::vector<double>& x, double tau) {
            return class_probs(PromptHead{to_matrix(weights), tau}, x);
        },
        py::arg("weights"), py::arg("x"), py::arg("tau") = 0.01);

    m.def(
        "kmeans",
        [](const F64& features, std::size_t k, const std::string& metric, std::uint64_t seed, std::size_t max_iter,
           double tol) {
            const auto c = kmeans(to_matrix(features), k, parse_metric(metric), seed, {max_iter, tol});
            py::dict d;
            d["assignments"] = from_vector(c.assignments);
            d["centroids"] = from_matrix(c.centroids);
            d["inertia"] = c.inertia;
            d["inertia_history"] = c.inertia_history;
            return d;
        },
        py::arg("features"), py::arg("k"), py::arg("metric") = "cosine", py::arg("seed") = 0,
        py::arg("max_iter") = 100, py::arg("tol") = 1e-6);

    m.def(
        "adjusted_rand_index",
        [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) { return adjusted_rand_index(a, b); },
        py::arg("a"), py::arg("b"));

    m.def(
        "_run_experiment",
        [](const EmbeddingDataset& ds, const std::string& config_json, std::uint64_t seed) {
            const auto cfg = experiment_config_from_json(nlohmann::json::parse(config_json));
            RunResult res;
            {
                py::gil_scoped_release release;
                res = run_experiment(ds, cfg, seed);
            }
            py::list out;
            for (const auto& r : res.reports) out.append(report_dict(r));
            return out;
        },
        py::arg("dataset"), py::arg("config_json"), py::arg("seed"));

    m.def(
        "_run_suite",
        [](const EmbeddingDataset& ds, const std::string& matrix_json, std::size_t jobs) {
            const auto [configs, seeds] = expand_matrix(nlohmann::json::parse(matrix_json));
            ReportTable table;
            {
                py::gil_scoped_release release;
                table = run_suite(ds, configs, seeds, jobs);
            }
            return py::make_tuple(format_report(table, ReportFormat::Json), format_summary_csv(table));
        },
        py::arg("dataset"), py::arg("matrix_json"), py::arg("jobs") = 1);
}
