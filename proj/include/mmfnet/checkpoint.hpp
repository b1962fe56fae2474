#pragma once

#include <filesystem>
#include <iosfwd>

#include "mmfnet/model.hpp"

namespace mmfnet::model {

/**
 * Versioned text checkpoint. Layout:
 *
 *   mmfnet-checkpoint 1
 *   lookback <L>
 *   horizon <H>
 *   ladder <s_1> ... <s_S>
 *   mask_enabled <0|1>
 *   tensor scale<i>.mask <rows> <cols>
 *   <rows lines of cols space-separated values>
 *   tensor scale<i>.weight <H> <L>
 *   ...
 *   tensor scale<i>.bias <H> 1
 *   ...
 *   end
 *
 * Values are row-major, printed in shortest round-trip form, so a saved and
 * reloaded parameter set is bit-identical.
 */
void write_checkpoint(std::ostream& out, const ModelParams& params);
ModelParams read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace mmfnet::model
