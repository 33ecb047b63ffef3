#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "drp/cli.hpp"
#include "drp/cluster.hpp"
#include "drp/error.hpp"
#include "drp/llm.hpp"
#include "drp/metrics.hpp"
#include "drp/tokenize.hpp"
#include "drp/uvq.hpp"

namespace py = pybind11;
using namespace drp;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

std::vector<TokenSequence> tokenize_all(const std::vector<std::string>& texts) {
    std::vector<TokenSequence> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(tokenize(t));
    return out;
}

py::dict rouge_dict(const RougeScore& s) {
    py::dict d;
    d["precision"] = s.precision;
    d["recall"] = s.recall;
    d["f1"] = s.f1;
    return d;
}

ChatRequest make_request(const std::string& model, const std::vector<std::pair<std::string, std::string>>& messages,
                         double temperature, int max_tokens) {
    ChatRequest r;
    r.model_id = model;
    for (const auto& [role, content] : messages) {
        ChatRole cr = ChatRole::User;
        if (role == "system") cr = ChatRole::System;
        else if (role == "assistant") cr = ChatRole::Assistant;
        else if (role != "user") throw Error(ErrorKind::InvalidArgument, "unknown chat role '" + role + "'");
        r.messages.push_back({cr, content});
    }
    r.temperature = temperature;
    r.max_tokens = max_tokens;
    r.validate();
    return r;
}

}  // namespace

PYBIND11_MODULE(_drp, m) {
    m.doc() = "Difference-aware review personalization core";

    PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
    error_type.call_once_and_store_result(
        [&]() { return py::object(py::exception<Error>(m, "DrpError", PyExc_RuntimeError)); });
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const auto& type = error_type.get_stored();
            py::object err = type(py::str(e.what()));
            err.attr("kind") = py::str(error_kind_name(e.kind()));
            err.attr("exit_code") = exit_code_for(e.kind());
            PyErr_SetObject(type.ptr(), err.ptr());
        }
    });

    m.def("tokenize", [](const std::string& text) { return tokenize(text).tokens; }, py::arg("text"));

    m.def(
        "bleu",
        [](const std::vector<std::string>& hyps, const std::vector<std::string>& refs) {
            return bleu(tokenize_all(hyps), tokenize_all(refs));
        },
        py::arg("hypotheses"), py::arg("references"), "Corpus BLEU in [0, 100].");
    m.def(
        "meteor", [](const std::string& h, const std::string& r) { return meteor(tokenize(h), tokenize(r)); },
        py::arg("hypothesis"), py::arg("reference"));
    m.def(
        "rouge_1", [](const std::string& h, const std::string& r) { return rouge_dict(rouge_1(tokenize(h), tokenize(r))); },
        py::arg("hypothesis"), py::arg("reference"));
    m.def(
        "rouge_l", [](const std::string& h, const std::string& r) { return rouge_dict(rouge_l(tokenize(h), tokenize(r))); },
        py::arg("hypothesis"), py::arg("reference"));

    m.def(
        "kmeans",
        [](const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed, std::size_t restarts) {
            std::vector<UserProfileEmbedding> pts;
            for (std::size_t i = 0; i < points.size(); ++i)
                pts.push_back({std::to_string(i), EmbeddingVector(points[i])});
            KMeansOptions opts;
            opts.k = k;
            opts.seed = seed;
            opts.restarts = restarts;
            const auto model = kmeans_fit(pts, opts);
            std::vector<std::size_t> labels;
            for (std::size_t i = 0; i < points.size(); ++i) labels.push_back(model.cluster_of(std::to_string(i)));
            std::vector<std::vector<double>> centroids;
            for (const auto& c : model.centroids) centroids.push_back(c.values());
            py::dict d;
            d["labels"] = labels;
            d["centroids"] = centroids;
            d["inertia"] = model.inertia;
            return d;
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("restarts") = 10);

    m.def(
        "request_body",
        [](const std::string& model, const std::vector<std::pair<std::string, std::string>>& messages,
           double temperature, int max_tokens) {
            return chat_request_body(make_request(model, messages, temperature, max_tokens));
        },
        py::arg("model"), py::arg("messages"), py::arg("temperature"), py::arg("max_tokens"));
    m.def(
        "request_hash",
        [](const std::string& model, const std::vector<std::pair<std::string, std::string>>& messages,
           double temperature, int max_tokens) {
            return canonical_request_hash(make_request(model, messages, temperature, max_tokens));
        },
        py::arg("model"), py::arg("messages"), py::arg("temperature"), py::arg("max_tokens"));
    m.def(
        "split_reasoning",
        [](const std::string& raw) {
            const auto s = split_reasoning(raw);
            return std::make_pair(s.content, s.reasoning_trace);
        },
        py::arg("raw"));

    m.def("canonical_dimension_name", &canonical_dimension_name, py::arg("name"));
    m.def(
        "pearson", [](const std::vector<double>& xs, const std::vector<double>& ys) { return pearson(xs, ys); },
        py::arg("xs"), py::arg("ys"));

    m.def(
        "ingest",
        [](const std::filesystem::path& corpus) {
            const auto s = cli::cmd_ingest(corpus);
            py::dict d;
            d["users"] = s.users;
            d["train"] = s.train;
            d["test"] = s.test;
            return d;
        },
        py::arg("corpus"));
    m.def(
        "run",
        [](const std::filesystem::path& config, const std::string& mode, bool mock) {
            cli::RunResult r;
            {
                py::gil_scoped_release release;
                r = cli::cmd_run(config, mode, mock);
            }
            return py::make_tuple(r.run_dir, to_python(r.manifest));
        },
        py::arg("config"), py::arg("mode") = "", py::arg("mock") = false,
        "Runs the pipeline; returns (run_dir, manifest).");
    m.def(
        "evaluate",
        [](const std::filesystem::path& run_dir, const std::filesystem::path& corpus) {
            MetricReport r;
            {
                py::gil_scoped_release release;
                r = cli::cmd_eval(run_dir, corpus);
            }
            return to_python(to_json(r));
        },
        py::arg("run_dir"), py::arg("corpus"));
    m.def(
        "uvq",
        [](const std::filesystem::path& run_dir, bool mock_judge) {
            std::vector<UvqReport> reports;
            {
                py::gil_scoped_release release;
                reports = cli::cmd_uvq(run_dir, mock_judge);
            }
            py::list out;
            for (const auto& r : reports) out.append(to_python(to_json(r)));
            return out;
        },
        py::arg("run_dir"), py::arg("mock_judge") = false);
}
