#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mqms/error.hpp"
#include "mqms/flowctl.hpp"
#include "mqms/fluid.hpp"
#include "mqms/io.hpp"
#include "mqms/optimize.hpp"
#include "mqms/policy.hpp"
#include "mqms/region.hpp"
#include "mqms/sim.hpp"

namespace py = pybind11;
using namespace mqms;

namespace {

Grid<double> to_grid(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw ContractViolation("matrix must be nonempty");
  Grid<double> g(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != g.cols()) throw ContractViolation("matrix rows must have equal length");
    for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) = rows[i][j];
  }
  return g;
}

py::dict stats_dict(const SimStats& s) {
  py::dict d;
  d["horizon"] = s.horizon;
  d["avg_total_occupancy"] = s.avg_total_occupancy;
  d["throughput"] = s.throughput;
  d["arrival_rate"] = s.arrival_rate;
  d["final_backlog"] = s.final_backlog;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mqms, m) {
  m.doc() = "Stability regions, MW scheduling and flow control for multi-queue multi-server systems";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<StateSpaceTooLarge>(m, "StateSpaceTooLarge", PyExc_MemoryError);
  py::register_exception<LpInfeasible>(m, "LpInfeasible", PyExc_ArithmeticError);
  py::register_exception<LpUnbounded>(m, "LpUnbounded", PyExc_ArithmeticError);

  py::class_<ChannelDistribution>(m, "ChannelDistribution")
      .def_static(
          "product_form",
          [](std::size_t n, std::size_t k, Count max_rate, std::vector<std::vector<double>> pmfs) {
            return ChannelDistribution::product_form({n, k, max_rate}, std::move(pmfs));
          },
          py::arg("N"), py::arg("K"), py::arg("M"), py::arg("pmfs"),
          "Independent links; pmfs[n*K + k] is the law of C[n][k] on {0..M}.")
      .def_static(
          "bernoulli", [](const std::vector<std::vector<double>>& p) { return ChannelDistribution::bernoulli(to_grid(p)); },
          py::arg("on_probability"))
      .def_static(
          "from_json", [](const std::string& text) { return io::parse_distribution(io::Json::parse(text)); },
          py::arg("text"))
      .def("to_json", [](const ChannelDistribution& d) { return io::to_json(d).dump(); })
      .def_property_readonly("N", [](const ChannelDistribution& d) { return d.dims().queues; })
      .def_property_readonly("K", [](const ChannelDistribution& d) { return d.dims().servers; })
      .def_property_readonly("M", [](const ChannelDistribution& d) { return d.dims().max_rate; });

  py::class_<RegionPolytope>(m, "Region")
      .def_property_readonly("N", [](const RegionPolytope& p) { return p.dims.queues; })
      .def_property_readonly("halfspaces",
                             [](const RegionPolytope& p) {
                               std::vector<std::pair<RateVector, double>> out;
                               for (const auto& h : p.halfspaces) out.emplace_back(h.alpha, h.bound);
                               return out;
                             })
      .def_property_readonly("source", [](const RegionPolytope& p) { return io::to_string(p.source); })
      .def("to_json", [](const RegionPolytope& p) { return io::to_json(p).dump(); })
      .def("inequalities", [](const RegionPolytope& p, int precision) { return io::format_inequalities(p, precision); },
           py::arg("precision") = 4)
      .def_static(
          "from_json", [](const std::string& text) { return io::parse_polytope(io::Json::parse(text)); },
          py::arg("text"))
      .def_static(
          "load", [](const std::string& path) { return io::parse_polytope(io::read_json_file(path)); }, py::arg("path"));

  m.def(
      "candidate_weights",
      [](std::size_t n, Count max_rate) {
        std::vector<std::vector<Count>> out;
        for (const auto& w : candidate_weights(n, max_rate)) out.emplace_back(w.entries().begin(), w.entries().end());
        return out;
      },
      py::arg("N"), py::arg("M"));
  m.def(
      "candidate_counts",
      [](std::size_t n, Count max_rate) {
        const auto c = candidate_counts(n, max_rate);
        py::dict d;
        d["weight_set_size"] = c.weight_set_size;
        d["full_grid_minus_zero"] = c.full_grid_minus_zero;
        d["candidates"] = c.candidates;
        d["multiset_weight_size"] = c.multiset_weight_size;
        d["multiset_grid_minus_zero"] = c.multiset_grid_minus_zero;
        return d;
      },
      py::arg("N"), py::arg("M"));
  m.def(
      "facet_rhs", [](const std::vector<double>& alpha, const ChannelDistribution& d) { return facet_rhs(alpha, d); },
      py::arg("alpha"), py::arg("dist"));
  m.def(
      "stability_polytope",
      [](const ChannelDistribution& d, const std::string& normals) {
        PolytopeOptions o;
        if (normals == "full") {
          o.normals = NormalMode::FullWN;
        } else if (normals != "vhat") {
          throw ConfigError("normals must be 'vhat' or 'full'");
        }
        return stability_polytope(d, o);
      },
      py::arg("dist"), py::arg("normals") = "vhat");
  m.def(
      "margin", [](const std::vector<double>& lambda, const RegionPolytope& p) { return margin(lambda, p); },
      py::arg("lam"), py::arg("region"));
  m.def(
      "vertex_for_direction",
      [](const std::vector<double>& alpha, const ChannelDistribution& d) { return vertex_for_direction(alpha, d); },
      py::arg("alpha"), py::arg("dist"));
  m.def("delay_bound", &delay_bound, py::arg("N"), py::arg("second_moment_bound"), py::arg("M"), py::arg("K"),
        py::arg("delta"));

  m.def(
      "_simulate",
      [](const ChannelDistribution& d, const std::string& arrivals_json, std::uint64_t slots, std::uint64_t seed) {
        const auto arrivals = io::parse_arrivals(io::Json::parse(arrivals_json));
        SimResult res;
        {
          py::gil_scoped_release release;
          res = run(d, arrivals, MaxWeightPolicy{}, {slots, seed, {}, false});
        }
        return stats_dict(res.stats);
      },
      py::arg("dist"), py::arg("arrivals_json"), py::arg("slots"), py::arg("seed"));

  m.def(
      "_clc2b",
      [](const ChannelDistribution& d, const std::string& arrivals_json, const std::string& utilities, double V,
         std::vector<double> r_max, std::uint64_t slots, std::uint64_t seed, double eta) {
        const auto arrivals = io::parse_arrivals(io::Json::parse(arrivals_json));
        const auto spec = parse_utilities(utilities);
        FlowResult res;
        {
          py::gil_scoped_release release;
          res = clc2b_run(d, arrivals, spec, {eta, V, std::move(r_max), slots, seed, false});
        }
        py::dict out;
        out["avg_admitted"] = res.avg_admitted;
        out["utility"] = res.utility;
        out["avg_total_occupancy"] = res.avg_total_occupancy;
        out["avg_virtual"] = res.avg_virtual;
        return out;
      },
      py::arg("dist"), py::arg("arrivals_json"), py::arg("utilities"), py::arg("V"), py::arg("r_max"),
      py::arg("slots"), py::arg("seed"), py::arg("eta") = 1.0);

  m.def(
      "solve_utility",
      [](const std::string& utilities, const RegionPolytope& p, const std::vector<double>& caps) {
        const auto sol = solve_utility(parse_utilities(utilities), p, caps);
        py::dict out;
        out["r_star"] = sol.r;
        out["utility"] = sol.utility;
        out["gap"] = sol.gap;
        out["iters"] = sol.iters;
        return out;
      },
      py::arg("utilities"), py::arg("region"), py::arg("caps"));

  m.def(
      "fluid_rhs_closed", [](double a1, double a2, double mu1, double mu2) {
        return fluid_rhs_closed(a1, a2, ExpFluidSystem(mu1, mu2));
      },
      py::arg("alpha1"), py::arg("alpha2"), py::arg("mu1"), py::arg("mu2"));
  m.def(
      "fluid_rhs_mc",
      [](double a1, double a2, double mu1, double mu2, std::uint64_t samples, std::uint64_t seed) {
        const ExpFluidSystem sys(mu1, mu2);
        McEstimate e;
        {
          py::gil_scoped_release release;
          e = fluid_rhs_mc(a1, a2, sys, samples, seed);
        }
        return std::pair{e.mean, e.stderr_};
      },
      py::arg("alpha1"), py::arg("alpha2"), py::arg("mu1"), py::arg("mu2"), py::arg("samples"), py::arg("seed"));
  m.def(
      "fluid_boundary", [](double lambda1, double mu1, double mu2) {
        return fluid_boundary(lambda1, ExpFluidSystem(mu1, mu2));
      },
      py::arg("lambda1"), py::arg("mu1"), py::arg("mu2"));
}
