#include "polyflow/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace polyflow {

using nlohmann::json;

json matrix_to_json(const MatrixXd& M) {
  json j;
  j["rows"] = M.rows();
  j["cols"] = M.cols();
  std::vector<double> data;
  data.reserve(M.size());
  for (int i = 0; i < M.rows(); ++i)
    for (int c = 0; c < M.cols(); ++c) data.push_back(M(i, c));
  j["data"] = data;
  return j;
}

MatrixXd matrix_from_json(const json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<int>(data.size()) != rows * cols)
    throw std::runtime_error("matrix_from_json: size mismatch");
  MatrixXd M(rows, cols);
  int k = 0;
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) M(i, c) = data[k++];
  return M;
}

namespace {

std::string basis_kind_name(BasisKind k) {
  switch (k) {
    case BasisKind::Polyflow: return "polyflow";
    case BasisKind::Monomials: return "monomials";
    case BasisKind::ThinPlateRbf: return "thin_plate_rbf";
    case BasisKind::Identity: return "identity";
  }
  return "identity";
}

BasisKind basis_kind_from_name(const std::string& s) {
  if (s == "polyflow") return BasisKind::Polyflow;
  if (s == "monomials") return BasisKind::Monomials;
  if (s == "thin_plate_rbf") return BasisKind::ThinPlateRbf;
  if (s == "identity") return BasisKind::Identity;
  throw std::runtime_error("unknown basis kind: " + s);
}

}  // namespace

json artifact_to_json(const ModelArtifact& art) {
  json j;
  j["schema_version"] = kArtifactSchemaVersion;
  j["tag"] = art.model.tag;
  j["n"] = art.model.n;
  j["m"] = art.model.m;
  j["n_lift"] = art.model.nLift;
  j["A"] = matrix_to_json(art.model.A);
  j["B"] = matrix_to_json(art.model.B);
  j["C"] = matrix_to_json(art.model.C);
  json jb;
  jb["kind"] = basis_kind_name(art.model.basis.kind);
  jb["degree"] = art.model.basis.degree;
  jb["include_state"] = art.model.basis.includeState;
  if (art.model.basis.centers.size() > 0)
    jb["centers"] = matrix_to_json(art.model.basis.centers);
  if (art.model.basis.reduction.size() > 0)
    jb["reduction"] = matrix_to_json(art.model.basis.reduction);
  j["basis"] = jb;
  j["residual_rms"] = art.model.residual.rms;
  j["residual_max"] = art.model.residual.max;
  j["seed"] = art.seed;
  json jd;
  jd["P"] = matrix_to_json(art.dare.P);
  jd["K"] = matrix_to_json(art.dare.K);
  jd["iterations"] = art.dare.iterations;
  jd["residual"] = art.dare.residual;
  jd["observable"] = art.dare.observable;
  j["dare"] = jd;
  json js;
  js["H"] = matrix_to_json(art.terminalSet.polytope.H);
  js["h"] = matrix_to_json(MatrixXd(art.terminalSet.polytope.h));
  js["determinedness"] = art.terminalSet.determinedness;
  j["invariant_set"] = js;
  return j;
}

ModelArtifact artifact_from_json(const json& j, const DiscreteSystem& sys) {
  if (j.at("schema_version").get<std::string>() != kArtifactSchemaVersion)
    throw std::runtime_error("artifact: unsupported schema version");
  ModelArtifact art;
  art.model.tag = j.at("tag").get<std::string>();
  art.model.n = j.at("n").get<int>();
  art.model.m = j.at("m").get<int>();
  art.model.nLift = j.at("n_lift").get<int>();
  art.model.A = matrix_from_json(j.at("A"));
  art.model.B = matrix_from_json(j.at("B"));
  art.model.C = matrix_from_json(j.at("C"));
  const json& jb = j.at("basis");
  art.model.basis.kind = basis_kind_from_name(jb.at("kind").get<std::string>());
  art.model.basis.degree = jb.at("degree").get<int>();
  art.model.basis.includeState = jb.at("include_state").get<bool>();
  if (jb.contains("centers"))
    art.model.basis.centers = matrix_from_json(jb.at("centers"));
  if (jb.contains("reduction"))
    art.model.basis.reduction = matrix_from_json(jb.at("reduction"));
  art.model.residual.rms = j.at("residual_rms").get<double>();
  art.model.residual.max = j.at("residual_max").get<double>();
  art.seed = j.at("seed").get<std::uint64_t>();
  const json& jd = j.at("dare");
  art.dare.P = matrix_from_json(jd.at("P"));
  art.dare.K = matrix_from_json(jd.at("K"));
  art.dare.iterations = jd.at("iterations").get<int>();
  art.dare.residual = jd.at("residual").get<double>();
  art.dare.observable = jd.at("observable").get<bool>();
  const json& js = j.at("invariant_set");
  art.terminalSet.polytope =
      Polytope(matrix_from_json(js.at("H")),
               VectorXd(matrix_from_json(js.at("h"))));
  art.terminalSet.determinedness = js.at("determinedness").get<int>();

  if (sys.n != art.model.n || sys.m != art.model.m)
    throw std::runtime_error("artifact: system dimensions do not match");
  DiscreteSystem sysCopy = sys;
  Basis basis = art.model.basis;
  art.model.lift = [sysCopy, basis](const VectorXd& x) {
    return basis.eval(sysCopy, x);
  };
  return art;
}

void save_artifact(const ModelArtifact& art, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_artifact: cannot open " + path);
  out << artifact_to_json(art).dump(2) << "\n";
}

ModelArtifact load_artifact(const std::string& path,
                            const DiscreteSystem& sys) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_artifact: cannot open " + path);
  json j;
  in >> j;
  return artifact_from_json(j, sys);
}

std::string format_sig(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_closed_loop_csv(const ClosedLoopRun& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_closed_loop_csv: cannot open " + path);
  const int n = static_cast<int>(run.states.rows());
  const int m = static_cast<int>(run.inputs.rows());
  out << "t";
  for (int i = 0; i < n; ++i) out << ",x" << (i + 1);
  for (int i = 0; i < m; ++i) out << ",u" << (i + 1);
  out << ",status\n";
  const int T = static_cast<int>(run.inputs.cols());
  for (int t = 0; t <= T; ++t) {
    out << t;
    for (int i = 0; i < n; ++i) out << "," << format_sig(run.states(i, t));
    for (int i = 0; i < m; ++i) {
      if (t < T)
        out << "," << format_sig(run.inputs(i, t));
      else if (run.terminalInput.size() == m)
        out << "," << format_sig(run.terminalInput[i]);
      else
        out << ",";
    }
    const char* status = "optimal";
    if (t == T && run.terminated == RunTermination::LostFeasibility)
      status = "infeasible";
    out << "," << status << "\n";
  }
}

void write_mask_csv(const FeasibleDomainScan& scan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_mask_csv: cannot open " + path);
  out << "i,j,x1,x2,feasible\n";
  const auto& g = scan.grid;
  auto gv = [](const GridAxis& ax, int i) {
    return ax.count == 1 ? ax.min
                         : ax.min + (ax.max - ax.min) * i / (ax.count - 1);
  };
  for (int i = 0; i < g.axis1.count; ++i)
    for (int j = 0; j < g.axis2.count; ++j)
      out << i << "," << j << "," << format_sig(gv(g.axis1, i)) << ","
          << format_sig(gv(g.axis2, j)) << "," << (scan.at(i, j) ? 1 : 0)
          << "\n";
}

void write_sidecar_json(const std::string& modelTag, std::uint64_t seed,
                        const std::string& configHash,
                        const std::string& path) {
  json j;
  j["model_tag"] = modelTag;
  j["seed"] = seed;
  j["config_hash"] = configHash;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_sidecar_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

std::uint64_t fnv1a_hash(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace polyflow
