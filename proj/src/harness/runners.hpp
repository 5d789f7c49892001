#pragma once

#include <string>
#include <vector>

#include "kpzlab/harness/artifact.hpp"
#include "kpzlab/potentials/potential.hpp"

namespace kpzlab::detail {

std::vector<Potential> config_potentials(const ExperimentConfig& c);

void run_thermo(const ExperimentConfig& c, RunArtifact& a);
void run_ensembles(const ExperimentConfig& c, RunArtifact& a);
void run_dynamics(const ExperimentConfig& c, RunArtifact& a);
void run_scaling_experiment(const ExperimentConfig& c, RunArtifact& a);
void run_bg(const ExperimentConfig& c, RunArtifact& a);
void run_sbe(const ExperimentConfig& c, RunArtifact& a);
void run_compare(const ExperimentConfig& c, RunArtifact& a);

std::string fmt(double x);

}  // namespace kpzlab::detail
