#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

#include "dpe/errors.hpp"
#include "dpe/network.hpp"
#include "dpe/pwl.hpp"
#include "dpe/regression.hpp"
#include "dpe/simulation.hpp"

namespace py = pybind11;

namespace {

py::dict metrics_dict(const dpe::CommodityMetrics& m) {
  py::dict d;
  d["commodity"] = m.id;
  d["predictor"] = std::string(dpe::to_string(m.predictor));
  d["total_tt"] = m.total_travel_time;
  d["avg_tt"] = m.average_travel_time;
  d["inflow_mass"] = m.inflow_mass;
  d["outflow_mass"] = m.outflow_mass;
  return d;
}

dpe::EdgeId edge_index(const dpe::SimulationResult& r, const std::string& id) {
  auto e = r.network->find_edge(id);
  if (!e) throw py::key_error("unknown edge '" + id + "'");
  return *e;
}

}  // namespace

PYBIND11_MODULE(_dpe, m) {
  m.doc() = "Dynamic prediction equilibria in the Vickrey point-queue model";

  py::register_exception<dpe::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<dpe::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<dpe::SimulationError>(m, "SimulationError", PyExc_RuntimeError);
  py::register_exception<dpe::PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<dpe::DomainError>(m, "DomainError", PyExc_ValueError);

  py::class_<dpe::PiecewiseLinearFn>(m, "PiecewiseLinearFn")
      .def(py::init<std::vector<double>, std::vector<double>, double, double>(), py::arg("times"), py::arg("values"),
           py::arg("slope_before") = 0.0, py::arg("slope_after") = 0.0)
      .def("__call__", &dpe::PiecewiseLinearFn::eval)
      .def("eval", &dpe::PiecewiseLinearFn::eval)
      .def_property_readonly("times", &dpe::PiecewiseLinearFn::times)
      .def_property_readonly("values", &dpe::PiecewiseLinearFn::values)
      .def_property_readonly("slope_after", &dpe::PiecewiseLinearFn::slope_after);

  m.def("compose_monotone", &dpe::compose_monotone, py::arg("outer"), py::arg("inner"));
  m.def(
      "pointwise_min", [](const std::vector<dpe::PiecewiseLinearFn>& fs) { return dpe::pointwise_min(fs); },
      py::arg("functions"));

  py::class_<dpe::Scenario>(m, "Scenario")
      .def_property_readonly("node_count", [](const dpe::Scenario& s) { return s.network.node_count(); })
      .def_property_readonly("edge_count", [](const dpe::Scenario& s) { return s.network.edge_count(); })
      .def_property_readonly("commodities",
                             [](const dpe::Scenario& s) {
                               std::vector<std::string> ids;
                               for (const auto& c : s.commodities) ids.push_back(c.id);
                               return ids;
                             })
      .def_property(
          "prediction_step", [](const dpe::Scenario& s) { return s.simulation.prediction_step; },
          [](dpe::Scenario& s, double v) { s.simulation.prediction_step = v; })
      .def_property(
          "horizon", [](const dpe::Scenario& s) { return s.simulation.horizon; },
          [](dpe::Scenario& s, double v) { s.simulation.horizon = v; })
      .def("dump", &dpe::dump_scenario);

  m.def("load_scenario", &dpe::load_scenario, py::arg("path"));
  m.def(
      "parse_scenario", [](const std::string& text) { return dpe::parse_scenario(text); }, py::arg("text"));

  py::class_<dpe::SimulationResult>(m, "RunResult")
      .def_property_readonly("metrics",
                             [](const dpe::SimulationResult& r) {
                               py::list out;
                               for (const auto& mm : r.metrics) out.append(metrics_dict(mm));
                               return out;
                             })
      .def_property_readonly("phases", [](const dpe::SimulationResult& r) { return r.phases; })
      .def("queue", [](const dpe::SimulationResult& r, const std::string& edge,
                       double t) { return r.flow.queue(edge_index(r, edge)).eval(t); })
      .def("inflow", [](const dpe::SimulationResult& r, std::size_t commodity, const std::string& edge,
                        double t) { return r.flow.inflow(commodity, edge_index(r, edge)).eval(t); })
      .def("events_csv",
           [](const dpe::SimulationResult& r) { return dpe::format_events(r.events, *r.network, r.commodities); })
      .def("metrics_csv", [](const dpe::SimulationResult& r) { return dpe::metrics_csv(r.metrics); })
      .def("flow_dump", &dpe::dump_flow);

  m.def(
      "run",
      [](const dpe::Scenario& sc) {
        dpe::RunOptions opts;
        opts.model = dpe::load_scenario_model(sc);
        py::gil_scoped_release release;
        return dpe::run(sc, opts);
      },
      py::arg("scenario"));

  m.def(
      "run_counterexample_demo",
      [](double eps, double horizon) {
        const auto rep = dpe::run_counterexample_demo(eps, horizon);
        py::dict d;
        d["e1_queue_at_1"] = rep.e1_queue_at_1;
        d["e2_inflow_before_1"] = rep.e2_inflow_before_1;
        d["flips"] = rep.flips;
        d["prediction_steps_after_1"] = rep.prediction_steps_after_1;
        return d;
      },
      py::arg("prediction_step") = 0.25, py::arg("horizon") = 20.0);

  m.def(
      "train_regression",
      [](const dpe::Scenario& sc, const std::vector<dpe::SimulationResult*>& runs, bool per_edge, std::uint64_t seed) {
        std::vector<dpe::QueueTrace> traces;
        for (const auto* r : runs) traces.push_back({r->flow.queues(), r->params.horizon});
        dpe::TrainingOptions opts;
        opts.per_edge = per_edge;
        opts.seed = seed;
        dpe::TrainingReport rep;
        const auto model = dpe::train_regression(sc.network, traces, opts, &rep);
        py::dict d;
        d["model"] = dpe::dump_model(model);
        d["edge_r2"] = rep.edge_r2;
        d["overall_r2"] = rep.overall_r2;
        d["ridge_fallback"] = rep.ridge_fallback;
        return d;
      },
      py::arg("scenario"), py::arg("runs"), py::arg("per_edge") = true, py::arg("seed") = 1);
}
