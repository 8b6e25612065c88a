#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "polyflow/serialization.hpp"

namespace polyflow {

/// Experiment configuration. Together with its seed this fully determines a
/// run; two runs from the same config produce byte-identical outputs.
struct ExperimentConfig {
  std::string systemName = "pest";
  double pestR = 0.5, pestC = 0.2, pestKappa = 2.0, pestD = 0.2;

  VectorXd xMin, xMax;  // state box X
  VectorXd uMin, uMax;  // input box U

  std::string basisKind = "polyflow";  // polyflow | edmd_polyflow | monomials
                                       // | rbf | jacobian
  int degree = 5;    // polyflow k or monomial max degree
  int rbfCount = 25;

  int sampleCount = 100000;
  std::uint64_t seed = 7;
  double rankTol = 1e-10;

  int horizon = 10;
  double qScale = 1.0;   // Q = qScale * I
  double rScale = 0.1;   // R = rScale * I
  int invariantKMax = 3000;

  int gridCount1 = 101, gridCount2 = 101;

  int runSteps = 100;
  std::vector<VectorXd> initialStates;

  std::string outputDir = "out";
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

DiscreteSystem make_system(const ExperimentConfig& cfg);
ConstraintSpec make_constraints(const ExperimentConfig& cfg);

/// Offline pipeline: sampling, fit (polyflow or EDMD), DARE, invariant set.
/// basisKind and seed override the config. rbfCenterSeed, when nonzero,
/// redraws the RBF centers from its own stream while the snapshot set stays
/// tied to `seed`, so center realizations can vary over shared data.
ModelArtifact fit_pipeline(const ExperimentConfig& cfg,
                           const std::string& basisKind, std::uint64_t seed,
                           std::uint64_t rbfCenterSeed = 0);

MpcSpec make_mpc_spec(const ExperimentConfig& cfg, const ModelArtifact& art);

}  // namespace polyflow
