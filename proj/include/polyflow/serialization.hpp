#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "polyflow/dare.hpp"
#include "polyflow/invariant_set.hpp"
#include "polyflow/lifting.hpp"
#include "polyflow/mpc.hpp"

namespace polyflow {

inline constexpr const char* kArtifactSchemaVersion = "1";

/// Offline fit artifact: lifted model plus its LQR terminal ingredients.
struct ModelArtifact {
  LiftedModel model;  // lift is bound only after load_artifact
  DareSolution dare;
  InvariantSet terminalSet;
  std::uint64_t seed = 0;
};

nlohmann::json matrix_to_json(const MatrixXd& M);  // row-major
MatrixXd matrix_from_json(const nlohmann::json& j);

nlohmann::json artifact_to_json(const ModelArtifact& art);
ModelArtifact artifact_from_json(const nlohmann::json& j,
                                 const DiscreteSystem& sys);

void save_artifact(const ModelArtifact& art, const std::string& path);
ModelArtifact load_artifact(const std::string& path, const DiscreteSystem& sys);

/// Fixed-width decimal with 12 significant digits, used by every CSV writer.
std::string format_sig(double v);

void write_closed_loop_csv(const ClosedLoopRun& run, const std::string& path);
void write_mask_csv(const FeasibleDomainScan& scan, const std::string& path);
void write_sidecar_json(const std::string& modelTag, std::uint64_t seed,
                        const std::string& configHash, const std::string& path);

std::uint64_t fnv1a_hash(const std::string& s);
std::string to_hex(std::uint64_t v);

}  // namespace polyflow
