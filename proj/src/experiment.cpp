#include "polyflow/experiment.hpp"

#include <fstream>
#include <stdexcept>

namespace polyflow {

using nlohmann::json;

namespace {

VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  VectorXd out(static_cast<int>(v.size()));
  for (int i = 0; i < out.size(); ++i) out[i] = v[i];
  return out;
}

std::vector<double> vec_to_std(const VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  const json& sys = j.at("system");
  cfg.systemName = sys.at("name").get<std::string>();
  if (sys.contains("params")) {
    const json& p = sys["params"];
    if (p.contains("r")) cfg.pestR = p["r"].get<double>();
    if (p.contains("c")) cfg.pestC = p["c"].get<double>();
    if (p.contains("kappa")) cfg.pestKappa = p["kappa"].get<double>();
    if (p.contains("d")) cfg.pestD = p["d"].get<double>();
  }
  const json& con = j.at("constraints");
  cfg.xMin = vec_from_json(con.at("x_min"));
  cfg.xMax = vec_from_json(con.at("x_max"));
  cfg.uMin = vec_from_json(con.at("u_min"));
  cfg.uMax = vec_from_json(con.at("u_max"));
  const json& b = j.at("basis");
  cfg.basisKind = b.at("kind").get<std::string>();
  if (b.contains("degree")) cfg.degree = b["degree"].get<int>();
  if (b.contains("count")) cfg.rbfCount = b["count"].get<int>();
  const json& s = j.at("samples");
  cfg.sampleCount = s.at("count").get<int>();
  cfg.seed = s.at("seed").get<std::uint64_t>();
  if (s.contains("rank_tol")) cfg.rankTol = s["rank_tol"].get<double>();
  const json& m = j.at("mpc");
  cfg.horizon = m.at("horizon").get<int>();
  cfg.qScale = m.at("q_scale").get<double>();
  cfg.rScale = m.at("r_scale").get<double>();
  if (m.contains("invariant_k_max"))
    cfg.invariantKMax = m["invariant_k_max"].get<int>();
  if (j.contains("grid")) {
    cfg.gridCount1 = j["grid"].at("count1").get<int>();
    cfg.gridCount2 = j["grid"].at("count2").get<int>();
  }
  if (j.contains("run")) {
    cfg.runSteps = j["run"].at("steps").get<int>();
    if (j["run"].contains("initial_states"))
      for (const auto& x0 : j["run"]["initial_states"])
        cfg.initialStates.push_back(vec_from_json(x0));
  }
  if (j.contains("output_dir")) cfg.outputDir = j["output_dir"].get<std::string>();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["system"] = {{"name", cfg.systemName},
                 {"params",
                  {{"r", cfg.pestR},
                   {"c", cfg.pestC},
                   {"kappa", cfg.pestKappa},
                   {"d", cfg.pestD}}}};
  j["constraints"] = {{"x_min", vec_to_std(cfg.xMin)},
                      {"x_max", vec_to_std(cfg.xMax)},
                      {"u_min", vec_to_std(cfg.uMin)},
                      {"u_max", vec_to_std(cfg.uMax)}};
  j["basis"] = {{"kind", cfg.basisKind},
                {"degree", cfg.degree},
                {"count", cfg.rbfCount}};
  j["samples"] = {{"count", cfg.sampleCount},
                  {"seed", cfg.seed},
                  {"rank_tol", cfg.rankTol}};
  j["mpc"] = {{"horizon", cfg.horizon},
              {"q_scale", cfg.qScale},
              {"r_scale", cfg.rScale},
              {"invariant_k_max", cfg.invariantKMax}};
  j["grid"] = {{"count1", cfg.gridCount1}, {"count2", cfg.gridCount2}};
  json run;
  run["steps"] = cfg.runSteps;
  run["initial_states"] = json::array();
  for (const auto& x0 : cfg.initialStates)
    run["initial_states"].push_back(vec_to_std(x0));
  j["run"] = run;
  j["output_dir"] = cfg.outputDir;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_config: cannot open " + path);
  json j;
  in >> j;
  return config_from_json(j);
}

DiscreteSystem make_system(const ExperimentConfig& cfg) {
  if (cfg.systemName == "pest")
    return pest_model(cfg.pestR, cfg.pestC, cfg.pestKappa, cfg.pestD);
  throw std::invalid_argument("make_system: unknown system " + cfg.systemName);
}

ConstraintSpec make_constraints(const ExperimentConfig& cfg) {
  ConstraintSpec spec;
  spec.stateSet = Polytope::box(cfg.xMin, cfg.xMax);
  spec.inputSet = Polytope::box(cfg.uMin, cfg.uMax);
  return spec;
}

ModelArtifact fit_pipeline(const ExperimentConfig& cfg,
                           const std::string& basisKind, std::uint64_t seed,
                           std::uint64_t rbfCenterSeed) {
  const DiscreteSystem sys = make_system(cfg);
  const ConstraintSpec con = make_constraints(cfg);
  const int M = cfg.sampleCount;

  LiftedModel model;
  if (basisKind == "polyflow") {
    const SampleSet samples = sample_states(con.stateSet, M, seed);
    const PolyflowFit fit = fit_polyflow(sys, samples, cfg.degree);
    model = assemble_polyflow_model(sys, fit);
  } else if (basisKind == "jacobian") {
    const auto [A, B] = jacobian_linearization(sys, VectorXd::Zero(sys.n),
                                               VectorXd::Zero(sys.m));
    model.A = A;
    model.B = B;
    model.C = MatrixXd::Identity(sys.n, sys.n);
    model.n = sys.n;
    model.m = sys.m;
    model.nLift = sys.n;
    model.basis = Basis::identity();
    model.lift = [](const VectorXd& x) { return x; };
    model.tag = sys.name + "_jacobian";
  } else {
    Basis basis;
    if (basisKind == "edmd_polyflow") {
      basis = Basis::polyflow(cfg.degree);
    } else if (basisKind == "monomials") {
      basis = Basis::monomials(cfg.degree);
    } else if (basisKind == "rbf") {
      Rng rng(rbfCenterSeed ? rbfCenterSeed
                            : seed + 1);  // separate stream for center placement
      MatrixXd centers(sys.n, cfg.rbfCount);
      for (int i = 0; i < cfg.rbfCount; ++i)
        centers.col(i) =
            rng.uniform_vec(con.stateSet.lo, con.stateSet.hi);
      basis = Basis::thinPlateRbf(centers, /*includeState=*/true);
    } else {
      throw std::invalid_argument("fit_pipeline: unknown basis " + basisKind);
    }

    const SampleSet snapshots =
        sample_snapshots(sys, con.stateSet, con.inputSet, M, seed);

    // Redundancy removal from sampled dictionary values (a subset of the
    // snapshots is plenty to reveal linear dependence).
    const int Mr = std::min(M, 2000);
    const int p = basis.fullDim(sys.n);
    MatrixXd values(Mr, p);
    for (int i = 0; i < Mr; ++i)
      values.row(i) = basis.eval(sys, snapshots.points.col(i)).transpose();
    const auto [V, nt] = remove_redundancy(values, cfg.rankTol, sys.n);
    if (nt < p) basis = basis.reduced(V);

    model = fit_edmd(basis, sys, snapshots);
    model.tag = sys.name + "_" + basisKind;
  }

  const MatrixXd Q = cfg.qScale * MatrixXd::Identity(sys.n, sys.n);
  const MatrixXd R = cfg.rScale * MatrixXd::Identity(sys.m, sys.m);
  const MatrixXd Qlift = model.C.transpose() * Q * model.C;

  ModelArtifact art;
  art.model = model;
  art.seed = seed;
  art.dare = solve_dare(model.A, model.B, Qlift, R);
  art.dare.observable = is_observable(model.A, model.C);
  art.terminalSet =
      max_invariant_set(model.A, model.B, art.dare.K, model.C, con.stateSet,
                        con.inputSet, cfg.invariantKMax);
  return art;
}

MpcSpec make_mpc_spec(const ExperimentConfig& cfg, const ModelArtifact& art) {
  const DiscreteSystem sys = make_system(cfg);
  MpcSpec spec;
  spec.model = art.model;
  spec.horizon = cfg.horizon;
  spec.Q = cfg.qScale * MatrixXd::Identity(sys.n, sys.n);
  spec.R = cfg.rScale * MatrixXd::Identity(sys.m, sys.m);
  spec.P = art.dare.P;
  spec.terminalSet = art.terminalSet;
  spec.constraints = make_constraints(cfg);
  return spec;
}

}  // namespace polyflow
