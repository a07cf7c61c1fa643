#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>

#include "retort/deck.hpp"
#include "retort/error.hpp"
#include "retort/hydraulics.hpp"
#include "retort/log.hpp"
#include "retort/simulation.hpp"
#include "retort/sweep.hpp"

namespace py = pybind11;
using namespace retort;

namespace {

py::dict flux_table(const RunOutputs& out) {
  const auto cols = flux_columns(out.species_names, out.species_units);
  std::vector<std::vector<double>> data(cols.size());
  for (const auto& row : out.flux) {
    const auto v = flux_values(row);
    for (std::size_t c = 0; c < cols.size(); ++c) data[c].push_back(v[c]);
  }
  py::dict d;
  for (std::size_t c = 0; c < cols.size(); ++c) d[py::str(cols[c])] = data[c];
  return d;
}

py::list probe_rows(const RunOutputs& out) {
  py::list l;
  for (const auto& p : out.probes) l.append(py::make_tuple(p.time, p.species, p.element, p.value, p.unit));
  return l;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "retort simulator core";
  log::set_level(log::Level::Quiet);

  auto base = py::register_exception<Error>(m, "RetortError", PyExc_RuntimeError);
  py::register_exception<DeckError>(m, "DeckError", base.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());
  py::register_exception<AuditFailure>(m, "AuditFailure", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def("set_verbosity", [](const std::string& level) {
    if (level == "quiet") log::set_level(log::Level::Quiet);
    else if (level == "verbose") log::set_level(log::Level::Verbose);
    else log::set_level(log::Level::Normal);
  });

  m.def(
      "cosby_pedotransfer",
      [](double sand, double silt, double clay) {
        const auto c = cosby_pedotransfer(sand, silt, clay);
        return std::map<std::string, double>{{"phi", c.phi}, {"b", c.b}, {"psi_s", c.psi_s}, {"k", c.k}};
      },
      py::arg("sand"), py::arg("silt"), py::arg("clay"));

  m.def(
      "check_deck",
      [](const std::string& text, std::optional<std::filesystem::path> base_dir) {
        ParseOptions o;
        o.base_dir = base_dir;
        const auto r = parse_deck(text, o);
        std::vector<std::string> diags;
        for (const auto& d : r.diagnostics) diags.push_back(d.format());
        return py::make_tuple(r.ok(), diags);
      },
      py::arg("text"), py::arg("base_dir") = py::none(),
      "Parses deck text; returns (ok, diagnostics).");

  py::class_<SimulationDeck>(m, "Deck")
      .def_static("load", &load_deck, py::arg("path"))
      .def_static(
          "from_text",
          [](const std::string& text, std::optional<std::filesystem::path> base_dir) {
            ParseOptions o;
            o.base_dir = base_dir;
            auto r = parse_deck(text, o);
            if (!r.ok()) {
              std::string msg;
              for (const auto& d : r.diagnostics) msg += d.format() + "\n";
              throw DeckError(msg);
            }
            return *r.deck;
          },
          py::arg("text"), py::arg("base_dir") = py::none())
      .def("to_text", &serialize_deck)
      .def_property_readonly("n_elements", [](const SimulationDeck& d) { return d.grid.size(); })
      .def_property_readonly("species",
                             [](const SimulationDeck& d) {
                               std::vector<std::string> names;
                               for (const auto& s : d.species.entries) names.push_back(s.name);
                               return names;
                             })
      .def_property(
          "t_end", [](const SimulationDeck& d) { return d.solver.t_end; },
          [](SimulationDeck& d, double v) { d.solver.t_end = v; })
      .def_property(
          "temperature", [](const SimulationDeck& d) { return d.solver.temperature; },
          [](SimulationDeck& d, double v) { d.solver.temperature = v; })
      .def("get", &read_target, py::arg("target"))
      .def(
          "set",
          [](SimulationDeck& d, const std::string& target, double v) {
            for (double* p : resolve_target(d, target)) *p = v;
          },
          py::arg("target"), py::arg("value"))
      .def("validate", [](const SimulationDeck& d) {
        std::vector<std::string> out;
        for (const auto& x : validate_deck(d)) out.push_back(x.format());
        return out;
      });

  py::class_<RunOutputs>(m, "RunResult")
      .def_readonly("species", &RunOutputs::species_names)
      .def_readonly("steps", &RunOutputs::steps)
      .def_readonly("t_end", &RunOutputs::t_end)
      .def_readonly("audit_worst", &RunOutputs::audit_worst)
      .def_readonly("audit_worst_quantity", &RunOutputs::audit_worst_quantity)
      .def_property_readonly("times",
                             [](const RunOutputs& r) {
                               std::vector<double> t;
                               for (const auto& s : r.snapshots) t.push_back(s.time);
                               return t;
                             })
      .def_property_readonly("flux", &flux_table)
      .def_property_readonly("probes", &probe_rows)
      .def("series", &extract_series, py::arg("quantity"));

  m.def(
      "run",
      [](const SimulationDeck& d, std::optional<std::filesystem::path> out_dir, bool enforce_audit) {
        RunOptions o;
        if (out_dir) o.out_dir = *out_dir;
        o.enforce_audit = enforce_audit;
        py::gil_scoped_release release;
        return run_simulation(d, o);
      },
      py::arg("deck"), py::arg("out_dir") = py::none(), py::arg("enforce_audit") = true);

  m.def(
      "sweep",
      [](const SimulationDeck& d, std::optional<std::filesystem::path> out_dir, int workers) {
        if (!d.sweep) throw DeckError("deck has no [SWEEP] block");
        SweepResult res;
        {
          py::gil_scoped_release release;
          res = run_sweep(d, *d.sweep, out_dir.value_or(std::filesystem::path{}), workers);
        }
        py::dict out;
        for (const auto& s : res.summaries) {
          py::dict e;
          e["time"] = s.time;
          e["mean"] = s.mean;
          e["std"] = s.std;
          out[py::str(s.quantity)] = e;
        }
        return out;
      },
      py::arg("deck"), py::arg("out_dir") = py::none(), py::arg("workers") = 1);

  m.def(
      "delta15N",
      [](double n14, double n15) {
        const auto r = compute_delta15N(n14, n15);
        return py::make_tuple(r.ratio, r.delta);
      },
      py::arg("n14"), py::arg("n15"));
  m.attr("R15_STANDARD") = kR15Standard;
}
