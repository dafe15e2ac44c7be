#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bfactory/factory.hpp"
#include "bfactory/harness.hpp"
#include "bfactory/json_io.hpp"
#include "bfactory/polytope.hpp"
#include "bfactory/sampford.hpp"

namespace py = pybind11;
using namespace bfactory;

namespace {

// Rationals cross the boundary as strings ("3/8"); the Python layer wraps them in Fraction.
RationalVector parse_vector(const std::vector<std::string>& items) {
  RationalVector out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(parse_rational(s));
  return out;
}

std::vector<std::string> print_vector(const std::vector<Rational>& values) {
  std::vector<std::string> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(to_string(v));
  return out;
}

Subset to_subset(const std::vector<std::size_t>& coins) { return Subset(coins.begin(), coins.end()); }

Polytope polytope_from(const std::string& domain_json) {
  return Polytope::from_domain(AffineCubeDomain::from_json(parse_json(domain_json)));
}

std::string report_json(TrialReport report) { return report.to_json().dump(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact oracles and samplers for multivariate Bernoulli factories.";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ResourceError>(m, "ResourceError", PyExc_RuntimeError);
  py::register_exception<CertificateViolation>(m, "CertificateViolation", PyExc_RuntimeError);

  m.def(
      "exact_eval",
      [](const std::string& tree_json, const std::vector<std::string>& p) {
        return to_string(exact_eval(FiniteTree::from_json(parse_json(tree_json)), parse_vector(p)));
      },
      py::arg("tree_json"), py::arg("p"), "Exact P[output = 1] of a finite coin tree.");

  m.def(
      "fbar",
      [](const std::vector<std::string>& p, const std::vector<std::size_t>& subset) {
        return to_string(fbar_U(parse_vector(p), to_subset(subset)));
      },
      py::arg("p"), py::arg("subset"), "Sampford probability of a 0-based subset; p must sum to its size.");

  m.def(
      "f_u",
      [](const std::vector<std::string>& p, const std::vector<std::size_t>& subset) {
        return to_string(f_U(parse_vector(p), to_subset(subset)));
      },
      py::arg("p"), py::arg("subset"));

  m.def(
      "vertices",
      [](const std::string& domain_json) {
        std::vector<std::vector<std::string>> out;
        const Polytope polytope = polytope_from(domain_json);
        for (const auto& v : polytope.vertices()) out.push_back(print_vector(v));
        return out;
      },
      py::arg("domain_json"));

  m.def(
      "f_v",
      [](const std::string& domain_json, const std::vector<std::string>& p) {
        return print_vector(f_v(polytope_from(domain_json), parse_vector(p)));
      },
      py::arg("domain_json"), py::arg("p"), "Vertex weights in the order of vertices(domain_json).");

  m.def(
      "simulate_tree",
      [](const std::string& tree_json, const std::vector<std::string>& p, std::uint64_t trials, std::uint64_t seed) {
        auto tree = FiniteTree::from_json(parse_json(tree_json));
        auto biases = parse_vector(p);
        Rational one = exact_eval(tree, biases);
        TrialReport report;
        {
          py::gil_scoped_release release;
          report = run_trials("tree", program_sampler(Program::finite(tree)), biases, RunConfig{trials, seed, {}, 1});
        }
        attach_oracle(report, {{"0", 1 - one}, {"1", one}});
        return report_json(std::move(report));
      },
      py::arg("tree_json"), py::arg("p"), py::arg("trials") = 100000, py::arg("seed") = 1);

  m.def(
      "sample_classic_sampford",
      [](const std::vector<std::string>& p, std::size_t k, std::uint64_t trials, std::uint64_t seed,
         std::optional<std::uint64_t> budget) {
        auto biases = parse_vector(p);
        auto sampler = [k](CoinSource& source, const FlipBudget& b) {
          auto out = classic_sampford(source, k, b);
          return TrialOutcome{out.subset ? std::optional(subset_label(*out.subset)) : std::nullopt, out.flips_used};
        };
        RunConfig config{trials, seed, budget ? FlipBudget(*budget) : FlipBudget::unbounded(), 1};
        TrialReport report;
        {
          py::gil_scoped_release release;
          report = run_trials("classic-sampford", sampler, biases, config);
        }
        Rational total = 0;
        for (const auto& x : biases) total += x;
        if (total == static_cast<long>(k)) {
          std::vector<std::pair<std::string, Rational>> oracle;
          for (const auto& u : k_subsets(biases.size(), k)) oracle.emplace_back(subset_label(u), fbar_U(biases, u));
          attach_oracle(report, oracle);
        }
        return report_json(std::move(report));
      },
      py::arg("p"), py::arg("k"), py::arg("trials") = 100000, py::arg("seed") = 1, py::arg("budget") = py::none());
}
