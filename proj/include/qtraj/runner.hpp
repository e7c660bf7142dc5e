#pragma once

#include "qtraj/config.hpp"
#include "qtraj/export.hpp"

namespace qtraj {

// Serializes the resolved configuration back to flat key = value text.
std::string to_flat_text(const RunConfig& cfg);

// Executes the configured mode, writes the output files and the manifest into
// cfg.out_dir, and returns the manifest.
RunManifest run(const RunConfig& cfg);

}  // namespace qtraj
