#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "epidiv/backends.hpp"
#include "epidiv/clustering.hpp"
#include "epidiv/diversity.hpp"
#include "epidiv/mock_backends.hpp"
#include "epidiv/retrieval.hpp"
#include "epidiv/sentences.hpp"
#include "epidiv/synthetic.hpp"
#include "epidiv/version.hpp"

namespace py = pybind11;
using namespace epidiv;

namespace {

AbundanceVector abundance(const std::vector<int64_t>& counts) {
    return AbundanceVector(counts);
}

PopulationSpec spec_from_args(const std::string& family, int classes, double param, int64_t n,
                              uint64_t seed) {
    if (family == "uniform") return PopulationSpec::uniform(classes, n, seed);
    if (family == "zipf") return PopulationSpec::zipf(classes, param, n, seed);
    if (family == "geometric") return PopulationSpec::geometric(classes, param, n, seed);
    throw EpidivError(ErrorCode::DistributionInvalid, "unknown family: " + family);
}

}  // namespace

PYBIND11_MODULE(epidiv_core, module) {
    module.doc() = "Epistemic diversity statistics: Hill numbers, coverage, rarefaction, "
                   "entailment clustering and the synthetic oracle.";
    module.attr("__version__") = kToolVersion;

    py::register_exception<EpidivError>(module, "EpidivError");

    module.def(
        "hill_diversity",
        [](const std::vector<int64_t>& counts, double l) {
            return hill_diversity(abundance(counts), HillOrder{l});
        },
        py::arg("counts"), py::arg("l") = 0.0,
        "Hill diversity of an abundance vector; l=0 is the Shannon point.");

    module.def(
        "hsd",
        [](const std::vector<int64_t>& counts) {
            return hill_shannon_diversity(abundance(counts));
        },
        py::arg("counts"), "Hill-Shannon diversity (exp of Shannon entropy in nats).");

    module.def(
        "coverage",
        [](const std::vector<int64_t>& counts) {
            CoverageEstimate est = estimate_coverage(abundance(counts));
            return py::make_tuple(est.value, est.defined);
        },
        py::arg("counts"),
        "Sample-coverage estimate from singleton/doubleton counts; returns (value, defined).");

    module.def(
        "rarefy_to_coverage",
        [](const std::vector<int>& class_sequence, double target, int resamples, uint64_t seed) {
            RarefactionPlan plan{target, resamples, seed};
            std::vector<std::vector<int64_t>> out;
            for (const auto& v : rarefy_to_coverage(class_sequence, plan)) {
                out.push_back(v.counts());
            }
            return out;
        },
        py::arg("class_sequence"), py::arg("target_coverage"), py::arg("resamples") = 100,
        py::arg("seed") = 0,
        "Coverage-based rarefaction over a claim-level class sequence; returns one abundance "
        "vector per resample.");

    module.def(
        "jsd",
        [](const std::vector<double>& p, const std::vector<double>& q) {
            return jensen_shannon_divergence(p, q);
        },
        py::arg("p"), py::arg("q"), "Jensen-Shannon divergence in nats; bounded by ln 2.");

    module.def(
        "bootstrap_ci",
        [](const std::vector<double>& values, int replicates, double level, uint64_t seed) {
            BootstrapInterval ci = bootstrap_ci(values, replicates, level, seed);
            return py::make_tuple(ci.low, ci.high);
        },
        py::arg("values"), py::arg("replicates") = 1000, py::arg("level") = 0.95,
        py::arg("seed") = 0, "Percentile bootstrap interval of the mean.");

    module.def("split_sentences",
               [](const std::string& text) { return split_sentences(text); }, py::arg("text"));

    module.def("estimate_tokens", &estimate_tokens, py::arg("text"),
               "Deterministic token-count proxy: ceil(chars / 4).");

    module.def(
        "sample_population",
        [](const std::string& family, int classes, double param, int64_t n, uint64_t seed) {
            SampledPopulation sampled =
                sample_population(spec_from_args(family, classes, param, n, seed));
            return py::make_tuple(sampled.claims, sampled.classes, sampled.distribution);
        },
        py::arg("family"), py::arg("classes"), py::arg("param") = 1.0, py::arg("n") = 0,
        py::arg("seed") = 0,
        "Draws a tagged synthetic claim population; returns (claims, classes, distribution).");

    module.def("true_hsd", &true_hsd, py::arg("distribution"));
    module.def("true_coverage", &true_coverage, py::arg("distribution"), py::arg("observed"));

    module.def(
        "cluster_tagged_claims",
        [](const std::vector<std::string>& texts, int max_retrieval) {
            MockSpec spec;
            MockSuite suite = mock_suite(spec);
            CachedEntailmentBackend entailment(suite.entailment);
            std::vector<Claim> claims(texts.size());
            for (size_t i = 0; i < texts.size(); ++i) {
                claims[i].id = std::to_string(i);
                claims[i].text = texts[i];
            }
            std::vector<EmbeddingVector> embeddings = embed_batch(*suite.embedding, texts);
            ClusterParams params;
            params.max_retrieval = max_retrieval;
            MeaningClassTable table = cluster_claims(claims, embeddings, entailment, params);
            std::vector<int> labels(texts.size());
            for (size_t i = 0; i < texts.size(); ++i) {
                labels[i] = table.cluster_of.at(claims[i].id);
            }
            return labels;
        },
        py::arg("texts"), py::arg("max_retrieval") = 6,
        "Clusters [[k<int>]]-tagged texts with the deterministic mock backends; returns one "
        "cluster label per text.");
}
