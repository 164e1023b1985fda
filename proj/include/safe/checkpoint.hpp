#pragma once

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

#include "safe/models.hpp"
#include "safe/tensor.hpp"

namespace safe::train {

/// On-disk model snapshot. Binary layout: magic "SAFEckpt", one version
/// byte (1), a 4-byte little-endian JSON header length, the JSON header
/// {kind, config, params (names+shapes+byte offsets), vocab_hash, metrics},
/// then the little-endian float64 parameter blobs concatenated in header
/// order. load(save(x)) is byte-identical.
struct Checkpoint {
  std::string kind;  // teacher_a | teacher_b | student
  nlohmann::json config;
  std::string vocab_hash;
  nlohmann::json metrics;
  std::vector<Parameter> params;  // header order; the name is the slot
};

inline constexpr char kCheckpointMagic[] = "SAFEckpt";
inline constexpr unsigned char kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const std::string& kind, nlohmann::json config,
                           const std::string& vocab_hash, nlohmann::json metrics,
                           const ParamMap& params);

/// Copies checkpoint parameters into a model's parameter map. The name sets
/// must match exactly; shapes are validated per parameter.
void load_params(const Checkpoint& c, ParamMap& target);

// Model config JSON round-trip (used inside checkpoint headers).
nlohmann::json to_json(const model::TeacherAConfig& c);
nlohmann::json to_json(const model::TeacherBConfig& c);
nlohmann::json to_json(const model::StudentConfig& c);
model::TeacherAConfig teacher_a_config_from(const nlohmann::json& j);
model::TeacherBConfig teacher_b_config_from(const nlohmann::json& j);
model::StudentConfig student_config_from(const nlohmann::json& j);

// Rebuild a model from a checkpoint; frozen models carry no gradients and
// never record computation graphs. Kind tags are validated.
model::TeacherA teacher_a_from(const Checkpoint& c, bool frozen);
model::TeacherB teacher_b_from(const Checkpoint& c, bool frozen);
model::Student student_from(const Checkpoint& c, bool frozen);

}  // namespace safe::train
