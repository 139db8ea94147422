// Python module. Tensors cross the boundary as float64 arrays of shape
// (rows, cols, depth); x[:, :, i] is frontal slice i.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstring>
#include <string>

#include "kdrsdl/metrics.hpp"
#include "kdrsdl/numerics.hpp"
#include "kdrsdl/rpca.hpp"
#include "kdrsdl/solver.hpp"
#include "kdrsdl/storage.hpp"
#include "kdrsdl/synth.hpp"

namespace py = pybind11;
using namespace kdrsdl;

namespace {

using FArray = py::array_t<double, py::array::f_style | py::array::forcecast>;

Tensor3 to_tensor(const FArray& a) {
  if (a.ndim() != 3) throw DimensionError("expected a 3-d array, got " + std::to_string(a.ndim()));
  std::vector<double> data(a.data(), a.data() + a.size());
  return Tensor3(a.shape(0), a.shape(1), a.shape(2), std::move(data));
}

py::array_t<double> to_array(const Tensor3& t) {
  py::array_t<double, py::array::f_style> out({t.rows(), t.cols(), t.depth()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::dict trace_dict(const std::vector<TraceRecord>& trace) {
  std::vector<int> iter;
  std::vector<double> rec, split, mu, mu_split;
  for (const auto& r : trace) {
    iter.push_back(r.iter);
    rec.push_back(r.err_rec);
    split.push_back(r.err_split);
    mu.push_back(r.mu);
    mu_split.push_back(r.mu_split);
  }
  py::dict d;
  d["iter"] = py::array(py::cast(iter));
  d["err_rec"] = py::array(py::cast(rec));
  d["err_split"] = py::array(py::cast(split));
  d["mu"] = py::array(py::cast(mu));
  d["mu_split"] = py::array(py::cast(mu_split));
  return d;
}

py::dict decompose(const FArray& x, std::optional<Index> rank, std::optional<double> lambda,
                   double alpha, double eta, double rho, double mu_cap_factor, double epsilon,
                   int max_iter, int num_threads) {
  SolverConfig cfg;
  cfg.rank = rank;
  cfg.lambda = lambda;
  cfg.alpha = alpha;
  cfg.eta = eta;
  cfg.rho = rho;
  cfg.mu_cap_factor = mu_cap_factor;
  cfg.epsilon = epsilon;
  cfg.max_iter = max_iter;
  cfg.num_threads = num_threads;
  const Tensor3 t = to_tensor(x);
  KdrsdlFactorization f;
  {
    py::gil_scoped_release release;
    f = solve(t, cfg);
  }
  py::dict d;
  d["a"] = f.a;
  d["b"] = f.b;
  d["core"] = to_array(f.core);
  d["outliers"] = to_array(f.outliers);
  d["low_rank"] = to_array(f.low_rank());
  d["converged"] = f.converged;
  d["iterations"] = f.iterations;
  d["trace"] = trace_dict(f.trace);
  return d;
}

py::dict synthesize(Index m, Index n, Index num_slices, Index rank_a, Index rank_b, Index r,
                    double zero_prob, std::uint64_t seed) {
  const SyntheticData s = generate({m, n, num_slices, rank_a, rank_b, r, zero_prob, seed});
  py::dict d;
  d["observations"] = to_array(s.observations);
  d["low_rank"] = to_array(s.truth.low_rank);
  d["outliers"] = to_array(s.truth.outliers);
  d["a"] = s.truth.a;
  d["b"] = s.truth.b;
  d["core"] = to_array(s.truth.core);
  return d;
}

py::dict rpca(const Matrix& x, std::optional<double> lambda, double epsilon, int max_iter) {
  RpcaOptions opts;
  opts.lambda = lambda;
  opts.epsilon = epsilon;
  opts.max_iter = max_iter;
  RpcaResult r;
  {
    py::gil_scoped_release release;
    r = rpca_ialm(x, opts);
  }
  py::dict d;
  d["low_rank"] = r.low_rank;
  d["sparse"] = r.sparse;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Robust Kronecker-decomposable component analysis";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<NonFiniteError>(m, "NonFiniteError", base.ptr());
  py::register_exception<SingularEquationError>(m, "SingularEquationError", base.ptr());
  py::register_exception<NotPositiveDefiniteError>(m, "NotPositiveDefiniteError", base.ptr());
  py::register_exception<AsymmetricInputError>(m, "AsymmetricInputError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());

  m.def("decompose", &decompose, py::arg("x"), py::kw_only(), py::arg("rank") = py::none(),
        py::arg("lam") = py::none(), py::arg("alpha") = 1e-2, py::arg("eta") = 1.25,
        py::arg("rho") = 1.2, py::arg("mu_cap_factor") = 1e7, py::arg("epsilon") = 1e-12,
        py::arg("max_iter") = 1000, py::arg("num_threads") = 1,
        "Split x into A R_i B^T + E_i. Returns a dict of arrays and the trace.");
  m.def("generate", &synthesize, py::kw_only(), py::arg("m") = 50, py::arg("n") = 50,
        py::arg("num_slices") = 20, py::arg("rank_a") = 5, py::arg("rank_b") = 5,
        py::arg("r") = 10, py::arg("zero_prob") = 0.7, py::arg("seed") = 0);
  m.def("rpca", &rpca, py::arg("x"), py::kw_only(), py::arg("lam") = py::none(),
        py::arg("epsilon") = 1e-7, py::arg("max_iter") = 1000);

  m.def(
      "shrink", [](const Matrix& x, double tau) { return shrink(x, tau); }, py::arg("x"),
      py::arg("tau"));
  m.def(
      "solve_stein",
      [](const Matrix& lhs, const Matrix& rhs, const Matrix& c) {
        return solve_stein({lhs, rhs, c});
      },
      py::arg("lhs"), py::arg("rhs"), py::arg("c"), "Solve X - lhs X rhs = c.");
  m.def(
      "reconstruct",
      [](const FArray& core, const Matrix& a, const Matrix& b) {
        return to_array(reconstruct(to_tensor(core), a, b));
      },
      py::arg("core"), py::arg("a"), py::arg("b"));
  m.def(
      "relative_error",
      [](const FArray& est, const FArray& truth) {
        return relative_error(to_tensor(est), to_tensor(truth));
      },
      py::arg("estimate"), py::arg("truth"));
  m.def(
      "roc_auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return roc_auc(scores, labels);
      },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "read_tensor", [](const std::string& path) { return to_array(read_tensor(path)); },
      py::arg("path"));
  m.def(
      "write_tensor",
      [](const std::string& path, const FArray& t) { write_tensor(path, to_tensor(t)); },
      py::arg("path"), py::arg("tensor"));
  m.def(
      "read_image", [](const std::string& path) { return to_array(read_image(path)); },
      py::arg("path"), "Grayscale images give depth 1, color images depth 3.");
}
