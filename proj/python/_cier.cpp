// Copyright 2026 The CIER Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings: metrics, rating utilities, the synthetic corpus and the
// experiment pipeline.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cier/app/config.hpp"
#include "cier/app/pipeline.hpp"
#include "cier/app/synthetic.hpp"
#include "cier/core/rating.hpp"
#include "cier/judge/judge.hpp"
#include "cier/metrics/metrics.hpp"
#include "cier/trainer/curriculum.hpp"
#include "cier/trainer/smoothing.hpp"

namespace py = pybind11;
using namespace cier;

namespace {

py::object to_python(const nlohmann::json& j) {
    switch (j.type()) {
        case nlohmann::json::value_t::null: return py::none();
        case nlohmann::json::value_t::boolean: return py::bool_(j.get<bool>());
        case nlohmann::json::value_t::number_integer: return py::int_(j.get<long long>());
        case nlohmann::json::value_t::number_unsigned: return py::int_(j.get<unsigned long long>());
        case nlohmann::json::value_t::number_float: return py::float_(j.get<double>());
        case nlohmann::json::value_t::string: return py::str(j.get<std::string>());
        case nlohmann::json::value_t::array: {
            py::list out;
            for (const auto& v : j) out.append(to_python(v));
            return out;
        }
        case nlohmann::json::value_t::object: {
            py::dict out;
            for (const auto& [k, v] : j.items()) out[py::str(k)] = to_python(v);
            return out;
        }
        default: return py::none();
    }
}

core::RatingDistribution to_distribution(const std::vector<double>& probs) {
    if (probs.size() != core::kRatingClasses) throw ValidationError("a rating distribution has 5 entries");
    core::RatingDistribution d;
    std::copy(probs.begin(), probs.end(), d.probs.begin());
    return d;
}

app::Variant variant_from(const std::string& name) {
    if (name == "cier") return app::Variant::kCier;
    if (name == "cier-m" || name == "cier_m") return app::Variant::kCierM;
    throw ValidationError("variant must be 'cier' or 'cier-m'");
}

}  // namespace

PYBIND11_MODULE(_cier, m) {
    m.doc() = "Explainable recommendation with rating-conditioned explanations";

    // Translators run newest first, so the base class goes first.
    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", py::make_tuple(base, py::handle(PyExc_ValueError)));
    py::register_exception<ParseError>(m, "ParseError", py::make_tuple(base, py::handle(PyExc_ValueError)));

    m.def("tokenize", &metrics::tokenize, py::arg("text"));
    m.def(
        "bleu", [](const std::vector<std::string>& c, const std::vector<std::string>& r, int n) {
            return metrics::bleu(c, r, n);
        },
        py::arg("candidates"), py::arg("references"), py::arg("n") = 4);
    m.def(
        "rouge",
        [](const std::vector<std::string>& c, const std::vector<std::string>& r) {
            const auto s = metrics::rouge(c, r);
            py::dict d;
            d["rouge1_recall"] = s.rouge1_recall;
            d["rouge2_recall"] = s.rouge2_recall;
            d["rougeL_f1"] = s.rougeL_f1;
            return d;
        },
        py::arg("candidates"), py::arg("references"));
    m.def(
        "explainability",
        [](const std::vector<std::string>& generated, const std::vector<std::vector<std::string>>& features) {
            const auto e = metrics::explainability(generated, features);
            py::dict d;
            d["fmr"] = e.fmr;
            d["fcr"] = e.fcr;
            d["usr"] = e.usr;
            d["div"] = e.div_defined ? py::object(py::float_(e.div)) : py::object(py::none());
            return d;
        },
        py::arg("generated"), py::arg("features"));
    m.def(
        "evaluate_file",
        [](const std::filesystem::path& predictions) { return to_python(app::evaluate_file(predictions).to_json()); },
        py::arg("predictions"));

    m.def(
        "rating_score", [](const std::vector<double>& probs) { return core::rating_score(to_distribution(probs)); },
        py::arg("probs"));
    m.def(
        "smoothed_distribution",
        [](int rating, const std::string& strategy, double alpha, int k, double sigma) {
            trainer::SmoothingConfig c;
            c.strategy = trainer::smoothing_strategy_from_string(strategy);
            c.alpha = alpha;
            c.k = k;
            c.sigma = sigma;
            c.validate();
            const auto d = trainer::smoothed_distribution(rating, c);
            return std::vector<double>(d.probs.begin(), d.probs.end());
        },
        py::arg("rating"), py::arg("strategy") = "neighbor", py::arg("alpha") = 0.2, py::arg("k") = 2,
        py::arg("sigma") = 1.0);
    m.def(
        "curriculum_schedule",
        [](std::size_t total_batches, std::uint64_t seed) {
            Rng rng(seed);
            std::vector<bool> out(total_batches);
            for (std::size_t t = 0; t < total_batches; ++t) {
                out[t] = trainer::curriculum_task(t, total_batches, rng) == trainer::Task::kExplanation;
            }
            return out;
        },
        py::arg("total_batches"), py::arg("seed") = 0,
        "True for batches that train explanation generation.");
    m.def(
        "lexicon_score", [](const std::string& text) { return judge::Lexicon::builtin().score(text); },
        py::arg("text"));

    m.def(
        "synthesize",
        [](std::size_t users, std::size_t items, std::size_t records, double noise, std::uint64_t seed) {
            app::SyntheticConfig c;
            c.users = users;
            c.items = items;
            c.records = records;
            c.noise = noise;
            c.seed = seed;
            c.validate();
            py::list out;
            for (const auto& r : app::synthesize(c)) out.append(to_python(nlohmann::json::parse(corpus::to_json_line(r))));
            return out;
        },
        py::arg("users") = 40, py::arg("items") = 30, py::arg("records") = 480, py::arg("noise") = 0.3,
        py::arg("seed") = 7);

    py::class_<app::Pipeline>(m, "Pipeline")
        .def(py::init([](const std::string& yaml_text) { return app::Pipeline(app::parse_config(yaml_text)); }),
             py::arg("config_yaml") = "{}")
        .def_static(
            "from_file", [](const std::filesystem::path& p) { return app::Pipeline(app::load_config(p)); },
            py::arg("path"))
        .def_property_readonly("config", [](const app::Pipeline& p) { return to_python(p.config().to_json()); })
        .def_property_readonly("workdir", [](const app::Pipeline& p) { return p.workdir().root; })
        .def(
            "prepare",
            [](app::Pipeline& p, bool force) {
                app::PrepareResult r;
                {
                    py::gil_scoped_release release;
                    r = p.prepare(force);
                }
                py::dict d;
                d["records"] = r.records;
                d["vocab_size"] = r.vocab_size;
                return d;
            },
            py::arg("force") = false)
        .def(
            "train",
            [](app::Pipeline& p, std::size_t split, const std::string& variant) {
                app::TrainResult r;
                {
                    py::gil_scoped_release release;
                    r = p.train(split, variant_from(variant));
                }
                return r.checkpoint;
            },
            py::arg("split"), py::arg("variant") = "cier")
        .def(
            "generate",
            [](app::Pipeline& p, std::size_t split, const std::string& variant) {
                std::vector<metrics::Prediction> preds;
                {
                    py::gil_scoped_release release;
                    preds = p.generate(split, variant_from(variant));
                }
                py::list out;
                for (const auto& pr : preds) out.append(to_python(nlohmann::json::parse(metrics::to_json_line(pr))));
                return out;
            },
            py::arg("split"), py::arg("variant") = "cier")
        .def(
            "evaluate",
            [](app::Pipeline& p, std::size_t split, const std::string& variant) {
                return to_python(p.evaluate(split, variant_from(variant)).to_json());
            },
            py::arg("split"), py::arg("variant") = "cier")
        .def(
            "judge",
            [](app::Pipeline& p, std::size_t split, const std::string& variant) {
                return to_python(p.judge(split, variant_from(variant)).to_json());
            },
            py::arg("split"), py::arg("variant") = "cier")
        .def(
            "run",
            [](app::Pipeline& p, const std::string& variant, bool force) {
                metrics::MetricsReport r;
                {
                    py::gil_scoped_release release;
                    r = p.run(variant_from(variant), force);
                }
                return to_python(r.to_json());
            },
            py::arg("variant") = "cier", py::arg("force") = false);
}
