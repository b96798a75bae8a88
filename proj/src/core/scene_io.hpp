#pragma once

#include <string>

#include "scene.hpp"

namespace nsplat {

// Scene storage: a JSON manifest (structure, counts, array offsets) plus a
// little-endian float32 blob holding every numeric parameter. Layout details
// in docs/scene_format.md. load(save(s)) is bit-exact for storage-quantized
// scenes.
void save_scene(const SceneGraph& scene, const std::string& manifest_path);
SceneGraph load_scene(const std::string& manifest_path);

// Rounds every parameter through the float32 storage type so subsequent
// save/load cycles are identities.
void quantize_to_storage(SceneGraph& scene);

}  // namespace nsplat
