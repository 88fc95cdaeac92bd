// Python surface of the core library. Matrices cross the boundary as 2-D
// float64 numpy arrays (copied, row-major); label vectors as uint8 sequences.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aeshield/attacks.hpp"
#include "aeshield/autoencoder.hpp"
#include "aeshield/classifier.hpp"
#include "aeshield/errors.hpp"
#include "aeshield/evaluation.hpp"
#include "aeshield/experiment.hpp"
#include "aeshield/mnist.hpp"
#include "aeshield/network.hpp"
#include "aeshield/serialize.hpp"

namespace py = pybind11;
using namespace aeshield;

namespace {

py::array_t<double> to_numpy(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

Matrix to_matrix(const py::array& arr) {
  auto a = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(arr);
  if (!a || a.ndim() != 2) {
    throw ShapeError("expected a 2-D array of pixels");
  }
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  std::vector<double> data(a.data(), a.data() + rows * cols);
  return Matrix(rows, cols, std::move(data));
}

AdamConfig adam_of(double learning_rate) {
  AdamConfig a;
  a.learning_rate = learning_rate;
  return a;
}

TargetMap target_map_of(const std::vector<std::uint8_t>& to) {
  if (to.size() != 10) throw ShapeError("target map needs exactly 10 entries");
  TargetMap t;
  std::copy(to.begin(), to.end(), t.to.begin());
  return t;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "autoencoder-filtered MNIST classifiers and the attacks they resist";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidInputError>(m, "InvalidInputError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);

  py::enum_<PixelScale>(m, "PixelScale")
      .value("raw_0_255", PixelScale::raw_0_255)
      .value("unit_0_1", PixelScale::unit_0_1);
  py::enum_<Split>(m, "Split")
      .value("train", Split::train)
      .value("test", Split::test);
  py::enum_<AutoencoderKind>(m, "AutoencoderKind")
      .value("vanilla", AutoencoderKind::vanilla)
      .value("sparse", AutoencoderKind::sparse)
      .value("denoising", AutoencoderKind::denoising)
      .value("variational", AutoencoderKind::variational);
  py::enum_<ClassifierKind>(m, "ClassifierKind")
      .value("softmax_regression", ClassifierKind::softmax_regression)
      .value("neural_net", ClassifierKind::neural_net);
  py::enum_<FeatureMode>(m, "FeatureMode")
      .value("reconstruction", FeatureMode::reconstruction)
      .value("latent_code", FeatureMode::latent_code);
  py::enum_<ThreatModel>(m, "ThreatModel")
      .value("oblivious", ThreatModel::oblivious)
      .value("adaptive", ThreatModel::adaptive);
  py::enum_<AttackKind>(m, "AttackKind")
      .value("nontargeted_linear", AttackKind::nontargeted_linear)
      .value("targeted_linear", AttackKind::targeted_linear)
      .value("fgsm", AttackKind::fgsm)
      .value("tfgsm", AttackKind::tfgsm)
      .value("bim", AttackKind::bim);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_property(
          "images", [](const Dataset& d) { return to_numpy(d.images); },
          [](Dataset& d, const py::array& a) { d.images = to_matrix(a); })
      .def_readwrite("labels", &Dataset::labels)
      .def_readwrite("scale", &Dataset::scale)
      .def_readwrite("split", &Dataset::split)
      .def("__len__", &Dataset::size);

  m.def("load_idx", &load_idx, py::arg("images_path"), py::arg("labels_path"));
  m.def("normalize", &normalize, py::arg("dataset"));
  m.def("subset", &subset, py::arg("dataset"), py::arg("n"), py::arg("seed"));
  m.def("synthetic_digits", &synthetic_digits, py::arg("per_class"),
        py::arg("seed"));
  m.def("label_histogram", &label_histogram, py::arg("labels"));

  py::class_<NetworkModel>(m, "NetworkModel")
      .def_property_readonly("input_dim",
                             [](const NetworkModel& n) { return n.input_dim; })
      .def_property_readonly(
          "loss_history",
          [](const NetworkModel& n) { return n.loss_history; })
      .def_property_readonly(
          "layer_dims", [](const NetworkModel& n) {
            std::vector<std::size_t> dims{n.input_dim};
            for (const DenseLayer& l : n.layers) dims.push_back(l.out_dim());
            return dims;
          });
  m.def("save_network", &save_network, py::arg("model"), py::arg("path"));
  m.def("load_network", &load_network, py::arg("path"));
  m.def(
      "infer",
      [](const NetworkModel& n, const py::array& x) {
        return to_numpy(infer(n, to_matrix(x)));
      },
      py::arg("model"), py::arg("x"));

  py::class_<AutoencoderConfig>(m, "AutoencoderConfig")
      .def(py::init<>())
      .def_readwrite("kind", &AutoencoderConfig::kind)
      .def_readwrite("sparsity_target", &AutoencoderConfig::sparsity_target)
      .def_readwrite("sparsity_weight", &AutoencoderConfig::sparsity_weight)
      .def_readwrite("l1_weight", &AutoencoderConfig::l1_weight)
      .def_readwrite("latent_dim", &AutoencoderConfig::latent_dim);

  py::class_<AutoencoderModel>(m, "AutoencoderModel")
      .def_property_readonly("kind",
                             [](const AutoencoderModel& a) { return a.config.kind; })
      .def_property_readonly("is_variational", &AutoencoderModel::is_variational)
      .def_property_readonly("code_dim", &AutoencoderModel::code_dim);

  m.def("build_autoencoder", &build_autoencoder, py::arg("config"),
        py::arg("seed"));
  m.def(
      "train_autoencoder",
      [](AutoencoderModel& model, const Dataset& data, std::size_t epochs,
         std::size_t batch_size, std::uint64_t seed, double learning_rate,
         const std::function<void(std::size_t, double)>& on_epoch) {
        AeTrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.seed = seed;
        cfg.adam = adam_of(learning_rate);
        cfg.on_epoch = on_epoch;
        return train_autoencoder(model, data, cfg);
      },
      py::arg("model"), py::arg("data"), py::arg("epochs") = 35,
      py::arg("batch_size") = 1024, py::arg("seed") = 0,
      py::arg("learning_rate") = 0.001,
      py::arg("on_epoch") = std::function<void(std::size_t, double)>{});
  m.def(
      "reconstruct",
      [](const AutoencoderModel& a, const py::array& x) {
        return to_numpy(reconstruct(a, to_matrix(x)));
      },
      py::arg("model"), py::arg("x"));
  m.def(
      "encode",
      [](const AutoencoderModel& a, const py::array& x) {
        return to_numpy(encode(a, to_matrix(x)));
      },
      py::arg("model"), py::arg("x"));

  py::class_<ClassifierPipeline>(m, "ClassifierPipeline")
      .def_property_readonly("kind",
                             [](const ClassifierPipeline& p) { return p.kind; })
      .def_property_readonly(
          "filtered", [](const ClassifierPipeline& p) { return bool(p.filter); })
      .def_property_readonly(
          "model", [](const ClassifierPipeline& p) { return p.model; })
      .def_property_readonly(
          "scale", [](const ClassifierPipeline& p) { return p.scale; });

  m.def(
      "train_classifier",
      [](ClassifierKind kind, const Dataset& train_unit,
         std::optional<AutoencoderModel> filter, std::size_t epochs,
         std::size_t batch_size, std::uint64_t seed, double learning_rate,
         const std::function<void(std::size_t, double)>& on_epoch) {
        ClassifierTrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.seed = seed;
        cfg.adam = adam_of(learning_rate);
        cfg.on_epoch = on_epoch;
        ClassifierPipeline p;
        p.kind = kind;
        p.scale = PixelScale::unit_0_1;
        Matrix features = train_unit.images;
        if (filter) {
          p.filter = std::move(*filter);
          features = filtered_features(*p.filter, train_unit.images,
                                       FeatureMode::reconstruction);
        }
        p.model = kind == ClassifierKind::softmax_regression
                      ? train_softmax_regression(features, train_unit.labels, cfg)
                      : train_nn_classifier(features, train_unit.labels, cfg);
        return p;
      },
      py::arg("kind"), py::arg("train_unit"), py::arg("filter") = std::nullopt,
      py::arg("epochs") = 0, py::arg("batch_size") = 0, py::arg("seed") = 0,
      py::arg("learning_rate") = 0.001,
      py::arg("on_epoch") = std::function<void(std::size_t, double)>{});
  m.def(
      "predict",
      [](const ClassifierPipeline& p, const py::array& x) {
        return predict(p, to_matrix(x));
      },
      py::arg("pipeline"), py::arg("x"));
  m.def(
      "predict_proba",
      [](const ClassifierPipeline& p, const py::array& x) {
        return to_numpy(predict_proba(p, to_matrix(x)));
      },
      py::arg("pipeline"), py::arg("x"));

  py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
      .def_property_readonly("counts",
                             [](const ConfusionMatrix& cm) {
                               py::array_t<std::uint64_t> out({10, 10});
                               auto* p = out.mutable_data();
                               for (std::size_t r = 0; r < 10; ++r) {
                                 for (std::size_t c = 0; c < 10; ++c) {
                                   p[r * 10 + c] = cm.counts[r][c];
                                 }
                               }
                               return out;
                             })
      .def("accuracy", &ConfusionMatrix::accuracy);
  m.def("confusion", &confusion, py::arg("preds"), py::arg("labels"));
  m.def(
      "report",
      [](const ConfusionMatrix& cm) {
        ClassReport rep = report(cm);
        py::dict out;
        py::list classes;
        for (std::size_t d = 0; d < 10; ++d) {
          const ClassMetrics& cmx = rep.per_class[d];
          classes.append(py::dict(
              py::arg("precision") = cmx.precision, py::arg("recall") = cmx.recall,
              py::arg("f1") = cmx.f1, py::arg("support") = cmx.support));
        }
        out["per_class"] = classes;
        out["accuracy"] = rep.accuracy;
        out["macro_precision"] = rep.macro_precision;
        out["macro_recall"] = rep.macro_recall;
        out["macro_f1"] = rep.macro_f1;
        return out;
      },
      py::arg("confusion"));
  m.def("accuracy", &accuracy, py::arg("preds"), py::arg("labels"));

  py::class_<AdversarialBatch>(m, "AdversarialBatch")
      .def_property_readonly(
          "originals",
          [](const AdversarialBatch& b) { return to_numpy(b.originals); })
      .def_property_readonly(
          "adversarials",
          [](const AdversarialBatch& b) { return to_numpy(b.adversarials); })
      .def_property_readonly(
          "true_labels",
          [](const AdversarialBatch& b) { return b.true_labels; })
      .def_property_readonly(
          "scale", [](const AdversarialBatch& b) { return b.scale; })
      .def_property_readonly(
          "epsilon", [](const AdversarialBatch& b) { return b.attack.epsilon; })
      .def_property_readonly(
          "kind", [](const AdversarialBatch& b) { return b.attack.kind; });

  m.def("constant_target", [](std::uint8_t digit) {
    TargetMap t = constant_target(digit);
    return std::vector<std::uint8_t>(t.to.begin(), t.to.end());
  }, py::arg("digit"));
  m.def(
      "fgsm",
      [](const ClassifierPipeline& p, const py::array& x_unit,
         const std::vector<std::uint8_t>& labels, double epsilon,
         ThreatModel threat) {
        return fgsm(p, to_matrix(x_unit), labels, epsilon, threat);
      },
      py::arg("pipeline"), py::arg("x_unit"), py::arg("labels"),
      py::arg("epsilon"), py::arg("threat") = ThreatModel::oblivious);
  m.def(
      "tfgsm",
      [](const ClassifierPipeline& p, const py::array& x_unit,
         const std::vector<std::uint8_t>& targets,
         const std::vector<std::uint8_t>& labels, double epsilon,
         ThreatModel threat) {
        return tfgsm(p, to_matrix(x_unit), target_map_of(targets), labels,
                     epsilon, threat);
      },
      py::arg("pipeline"), py::arg("x_unit"), py::arg("targets"),
      py::arg("labels"), py::arg("epsilon"),
      py::arg("threat") = ThreatModel::oblivious);
  m.def(
      "bim",
      [](const ClassifierPipeline& p, const py::array& x_unit,
         const std::vector<std::uint8_t>& labels, double epsilon, double step,
         std::size_t iterations, ThreatModel threat) {
        return bim(p, to_matrix(x_unit), labels, epsilon, step, iterations,
                   threat);
      },
      py::arg("pipeline"), py::arg("x_unit"), py::arg("labels"),
      py::arg("epsilon"), py::arg("step"), py::arg("iterations"),
      py::arg("threat") = ThreatModel::oblivious);
  m.def(
      "nontargeted_linear",
      [](const ClassifierPipeline& p, const py::array& x_raw,
         const std::vector<std::uint8_t>& labels, double epsilon,
         ThreatModel threat) {
        return nontargeted_linear(p, to_matrix(x_raw), labels, epsilon, threat);
      },
      py::arg("pipeline"), py::arg("x_raw"), py::arg("labels"),
      py::arg("epsilon"), py::arg("threat") = ThreatModel::oblivious);
  m.def(
      "targeted_linear",
      [](const ClassifierPipeline& p, const py::array& x_raw,
         const std::vector<std::uint8_t>& targets,
         const std::vector<std::uint8_t>& labels, double epsilon,
         ThreatModel threat) {
        return targeted_linear(p, to_matrix(x_raw), target_map_of(targets),
                               labels, epsilon, threat);
      },
      py::arg("pipeline"), py::arg("x_raw"), py::arg("targets"),
      py::arg("labels"), py::arg("epsilon"),
      py::arg("threat") = ThreatModel::oblivious);
  m.def("fooling_rate", &fooling_rate, py::arg("batch"), py::arg("pipeline"));
  m.def(
      "input_gradient",
      [](const ClassifierPipeline& p, const py::array& x_unit,
         const std::vector<std::uint8_t>& labels, ThreatModel threat) {
        return to_numpy(
            input_gradient(p, to_matrix(x_unit), one_hot(labels), threat));
      },
      py::arg("pipeline"), py::arg("x_unit"), py::arg("labels"),
      py::arg("threat") = ThreatModel::oblivious);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def("echo", [](const ExperimentConfig& c) {
        py::dict out;
        for (const auto& [k, v] : config_echo(c)) out[py::str(k)] = v;
        return out;
      });
  m.def("load_config", &load_config, py::arg("path"));
  m.def("parse_config_text", &parse_config_text, py::arg("text"),
        py::arg("origin") = std::string("<python>"));
  m.def("resolve_output_dir", &resolve_output_dir, py::arg("config"));
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> argv_store;
        argv_store.reserve(args.size() + 1);
        argv_store.push_back("aeshield");
        for (const std::string& a : args) argv_store.push_back(a);
        std::vector<char*> argv;
        argv.reserve(argv_store.size());
        for (std::string& s : argv_store) argv.push_back(s.data());
        return cli_main(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"));
}
