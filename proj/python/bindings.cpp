//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "hbgsa/error.hpp"
#include "hbgsa/features/smiles.hpp"
#include "hbgsa/model/hbgsa_model.hpp"
#include "hbgsa/objective.hpp"
#include "hbgsa/structure/hbond.hpp"
#include "hbgsa/structure/pdb.hpp"

namespace py = pybind11;

namespace {

py::dict bond_to_dict(const hbgsa::HydrogenBond &b) {
  py::dict d;
  d["protein_serial"] = b.protein_atom_serial;
  d["ligand_serial"] = b.ligand_atom_serial;
  d["distance"] = b.distance;
  d["angle"] = b.angle_deg ? py::cast(*b.angle_deg) : py::none();
  d["protein_end"] = py::make_tuple(b.protein_end[0], b.protein_end[1], b.protein_end[2]);
  d["ligand_end"] = py::make_tuple(b.ligand_end[0], b.ligand_end[1], b.ligand_end[2]);
  d["midpoint"] = py::make_tuple(b.midpoint[0], b.midpoint[1], b.midpoint[2]);
  return d;
}

py::dict report_to_dict(const hbgsa::MetricsReport &r) {
  py::dict d;
  d["rmse"] = r.rmse;
  d["mae"] = r.mae;
  d["pearson_r"] = r.pearson_r;
  d["ci"] = r.ci;
  d["n"] = r.n;
  return d;
}

}  // namespace

PYBIND11_MODULE(_hbgsa, m) {
  m.doc() = "Native core of the hbgsa toolkit";

  static py::exception<hbgsa::Error> base(m, "HbgsaError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p)
        std::rethrow_exception(p);
    } catch (const hbgsa::Error &e) {
      const char *kind = "data";
      if (e.kind() == hbgsa::ErrorKind::kConfig)
        kind = "usage";
      else if (e.kind() == hbgsa::ErrorKind::kNumeric)
        kind = "numeric";
      py::object exc = base;
      PyErr_SetObject(exc.ptr(), py::make_tuple(std::string(kind) + ": " + e.what()).ptr());
    }
  });

  m.def(
      "detect_hbonds",
      [](const std::string &pdb_path, std::optional<std::string> ligand, double max_distance,
         double min_angle) {
        hbgsa::HBondCriteria crit;
        crit.max_distance = max_distance;
        crit.min_angle_deg = min_angle;
        crit.validate();
        const auto bonds = hbgsa::detect_hbonds(hbgsa::read_pdb_file(pdb_path, ligand), crit);
        py::list out;
        for (const auto &b: bonds)
          out.append(bond_to_dict(b));
        return out;
      },
      py::arg("pdb_path"), py::arg("ligand") = py::none(), py::arg("max_distance") = 3.5,
      py::arg("min_angle") = 120.0,
      "Hydrogen bonds of a PDB complex, shortest first, as dicts.");

  m.def("hbond_density", &hbgsa::hbond_density, py::arg("n_hbond"), py::arg("n_ligand"));
  m.def("smiles_atom_count", [](const std::string &s) { return hbgsa::smiles_atom_count(s); },
        py::arg("smiles"), "Formula atom count, hydrogens included.");

  using Vec = std::vector<double>;
  m.def("rmse", [](const Vec &p, const Vec &t) { return hbgsa::rmse(p, t); }, py::arg("pred"),
        py::arg("target"));
  m.def("mae", [](const Vec &p, const Vec &t) { return hbgsa::mae(p, t); }, py::arg("pred"),
        py::arg("target"));
  m.def("pearson_r", [](const Vec &p, const Vec &t) { return hbgsa::pearson_r(p, t); },
        py::arg("pred"), py::arg("target"));
  m.def(
      "concordance_index",
      [](const Vec &p, const Vec &t, bool strict) { return hbgsa::concordance_index(p, t, strict); },
      py::arg("pred"), py::arg("target"), py::arg("strict") = false);
  m.def(
      "evaluate_metrics",
      [](const Vec &p, const Vec &t, bool strict) {
        return report_to_dict(hbgsa::evaluate_metrics(p, t, strict));
      },
      py::arg("pred"), py::arg("target"), py::arg("strict_ci") = false);

  m.def(
      "param_count",
      [](const std::string &config_text) {
        const auto cfg = hbgsa::HbgsaConfig::from_text(config_text);
        cfg.validate();
        return hbgsa::param_count(hbgsa::build_params<float>(cfg, 0));
      },
      py::arg("config_text") = "",
      "Trainable parameters of a model config given as 'key = value' lines.");

  m.def(
      "run_cli",
      [](const std::vector<std::string> &args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = hbgsa::cli::run(args, out, err);
        }
        return std::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one command-line invocation; returns (exit_code, stdout, stderr).");
}
