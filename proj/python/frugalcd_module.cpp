#include "frugal/alloop.hpp"
#include "frugal/augment.hpp"
#include "frugal/dataio.hpp"
#include "frugal/error.hpp"
#include "frugal/invnet.hpp"
#include "frugal/linalg.hpp"
#include "frugal/persist.hpp"
#include "frugal/selection.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace frugal;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw Error(ErrorKind::Shape, "ragged matrix");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

std::vector<std::vector<double>> to_rows(const Matrix& m) {
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < m.rows(); ++r) rows.emplace_back(m.row(r).begin(), m.row(r).end());
  return rows;
}

LabeledSet to_labeled(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys) {
  if (xs.size() != ys.size()) throw Error(ErrorKind::Shape, "one label per sample required");
  LabeledSet out;
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back({xs[i], label_from_int(ys[i])});
  return out;
}

std::vector<Label> to_labels(const std::vector<int>& ys) {
  std::vector<Label> out;
  for (int y : ys) out.push_back(label_from_int(y));
  return out;
}

SessionConfig make_config(const py::dict& kw) {
  Json doc = Json::object();
  if (!kw.empty()) doc = Json::parse(py::module_::import("json").attr("dumps")(kw).cast<std::string>());
  return config_from_json(doc);
}

}  // namespace

PYBIND11_MODULE(_frugalcd, m) {
  m.doc() = "Frugal active-learning change detection with invertible-network augmentation";

  static py::exception<Error> error(m, "FrugalError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed") = 0, py::arg("counter") = 0)
      .def_property_readonly("seed", &RngStream::seed)
      .def_property_readonly("counter", &RngStream::counter)
      .def("uniform", &RngStream::uniform)
      .def("normal", &RngStream::normal)
      .def("split", &RngStream::split);

  m.def("gaussian_vector", [](std::size_t d, RngStream& rng) { return gaussian_vector(d, rng); });
  m.def("orthonormality_residual", [](const std::vector<std::vector<double>>& w) {
    return orthonormality_residual(to_matrix(w));
  });
  m.def("spectral_norm", [](const std::vector<std::vector<double>>& w) { return spectral_norm(to_matrix(w)); });
  m.def("invert_matrix", [](const std::vector<std::vector<double>>& w) {
    return to_rows(invert_matrix(to_matrix(w)));
  });

  py::class_<InvertibleNet>(m, "InvertibleNet")
      .def_static(
          "random",
          [](std::size_t dim, std::size_t depth, RngStream& rng) {
            return InvertibleNet::random({dim, depth}, rng);
          },
          py::arg("dim"), py::arg("depth"), py::arg("rng"))
      .def_static("identity", &InvertibleNet::identity, py::arg("dim"), py::arg("depth"))
      .def_property_readonly("dim", &InvertibleNet::dim)
      .def_property_readonly("depth", &InvertibleNet::depth)
      .def("weight", [](const InvertibleNet& n, std::size_t i) { return to_rows(n.layer(i).weight); })
      .def("with_weight",
           [](const InvertibleNet& n, std::size_t i, const std::vector<std::vector<double>>& w) {
             return n.with_layer_weight(i, to_matrix(w));
           })
      .def("forward", [](const InvertibleNet& n, const Vector& x) { return encode(n, x); })
      .def(
          "inverse",
          [](const InvertibleNet& n, const Vector& z, bool transpose) {
            return inverse(n, z, transpose ? InverseMode::Transpose : InverseMode::Exact);
          },
          py::arg("z"), py::arg("transpose") = false)
      .def("classify", [](const InvertibleNet& n, const Vector& x) { return classify(n, x); })
      .def("loss", [](const InvertibleNet& n, const std::vector<std::vector<double>>& xs,
                      const std::vector<int>& ys) { return loss(n, to_labeled(xs, ys)); })
      .def("lipschitz_bound", [](const InvertibleNet& n) { return lipschitz_bound(n); })
      .def("to_json", [](const InvertibleNet& n) { return to_json(n).dump(); });

  m.def(
      "fit",
      [](const std::vector<std::vector<double>>& xs, const std::vector<int>& ys, std::size_t depth,
         std::size_t epochs, double learning_rate, RngStream& rng) {
        if (xs.empty()) throw Error(ErrorKind::InvalidArgument, "fit: empty data");
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.learning_rate = learning_rate;
        return fit({xs.front().size(), depth}, to_labeled(xs, ys), cfg, rng);
      },
      py::arg("xs"), py::arg("ys"), py::arg("depth") = 4, py::arg("epochs") = 300,
      py::arg("learning_rate") = 0.01, py::arg("rng"));

  m.def(
      "unary_augment",
      [](const InvertibleNet& n, const Vector& x, double delta, RngStream& rng, const std::string& space) {
        return unary_augment(n, LabeledSample{x, Label::NoChange}, delta, rng, parse_augment_space(space)).x;
      },
      py::arg("net"), py::arg("x"), py::arg("delta"), py::arg("rng"), py::arg("space") = "latent");
  m.def(
      "binary_combine",
      [](const InvertibleNet& n, const Vector& x1, const Vector& x2, const Vector& w, bool crisp,
         const std::string& space) {
        return binary_combine(n, x1, x2, w, crisp, parse_augment_space(space));
      },
      py::arg("net"), py::arg("x1"), py::arg("x2"), py::arg("weights"), py::arg("crisp"),
      py::arg("space") = "latent");

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("size", &Dataset::size)
      .def_property_readonly("dim", &Dataset::dim)
      .def("__len__", &Dataset::size)
      .def("ids", [](const Dataset& d) {
        std::vector<SampleId> ids;
        for (const auto& s : d.samples()) ids.push_back(s.id);
        return ids;
      })
      .def("features", [](const Dataset& d, SampleId id) { return d.at(id).features; })
      .def("label", [](const Dataset& d, SampleId id) -> std::optional<int> {
        const auto& y = d.at(id).label;
        return y ? std::optional<int>(to_int(*y)) : std::nullopt;
      })
      .def("count", [](const Dataset& d, int y) { return d.count(label_from_int(y)); })
      .def_property_readonly("split", [](const Dataset& d) -> py::object {
        if (!d.split()) return py::none();
        return py::make_tuple(d.split()->train, d.split()->eval);
      })
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def(
      "synth_generate",
      [](std::size_t n, std::size_t n_pos, std::size_t dim, double noise, std::uint64_t seed) {
        SynthConfig c;
        c.n = n;
        c.n_pos = n_pos;
        c.dim = dim;
        c.noise = noise;
        c.seed = seed;
        return synth_generate(c);
      },
      py::arg("n") = 2200, py::arg("n_pos") = 39, py::arg("dim") = 32, py::arg("noise") = SynthConfig{}.noise,
      py::arg("seed") = 0);
  m.def("load_dataset", &load_dataset);
  m.def("save_dataset", &save_dataset);
  m.def("split_half", [](const Dataset& d, RngStream& rng) { return split_half(d, rng); });
  m.def("compute_eer", [](const std::vector<double>& scores, const std::vector<int>& ys) {
    return compute_eer(scores, to_labels(ys));
  });

  m.def("sampling_rate", py::overload_cast<std::size_t, std::size_t>(&sampling_rate),
        py::arg("labeled"), py::arg("dataset_size"));
  m.def("auc_of_eers", [](const std::vector<double>& eers) { return auc_of_eers(eers); });

  m.def(
      "run_simulated",
      [](const Dataset& d, const py::kwargs& kw) {
        SessionConfig cfg = make_config(kw);
        if (!kw.contains("net")) cfg.shape.dim = d.dim();
        GroundTruthOracle oracle(d);
        const MetricsHistory h = run_simulated(d, cfg, oracle);
        py::list out;
        for (const auto& r : h.records) {
          out.append(py::make_tuple(r.iteration, r.sampling_rate,
                                    r.eer ? py::cast(*r.eer) : py::none()));
        }
        return out;
      },
      py::arg("dataset"),
      "Simulated session against ground truth; keyword arguments follow the session "
      "config JSON (seed, iterations, display_size, strategy, augment, net, train). "
      "Returns (iteration, sampling_rate, eer) tuples.");
  m.def("supervised_eer", [](const Dataset& d, const py::kwargs& kw) {
    SessionConfig cfg = make_config(kw);
    if (!kw.contains("net")) cfg.shape.dim = d.dim();
    return supervised_eer(d, cfg);
  });
}
