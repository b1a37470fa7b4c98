#pragma once

#include <json.hpp>

#include "sts/morse.hpp"
#include "sts/sde.hpp"
#include "sts/spectral.hpp"

namespace sts {

// Machine-readable report fragments shared by the CLI and tests. All
// serializations are deterministic: object keys are sorted and no
// timestamps are embedded.
nlohmann::json spectrum_report_json(const SpectrumReport& report);
nlohmann::json morse_complex_json(const MorseComplexData& data,
                                  const PoincareHopfResult& ph);
nlohmann::json density_json(const EmpiricalDensity& density);
nlohmann::json system_config_json(const SystemSpec& system);

// Atomic artifact write: temp file in the target directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace sts
