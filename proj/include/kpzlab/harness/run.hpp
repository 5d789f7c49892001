#pragma once

#include "kpzlab/harness/artifact.hpp"
#include "kpzlab/harness/config.hpp"

namespace kpzlab {

// Resolves and validates the config (usage errors are thrown before any compute), runs the
// experiment and collects tables and verdicts. A numeric failure mid-run is caught and recorded in
// the artifact's failure field together with whatever was finished.
RunArtifact run(const ExperimentConfig& config);

// 0 all verdicts pass, 2 some verdict failed, 1 the run failed
int exit_code(const RunArtifact& a);

}  // namespace kpzlab
