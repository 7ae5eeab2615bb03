#pragma once

#include "koopcert/edmdc.hpp"
#include "koopcert/harness.hpp"

#include <filesystem>
#include <vector>

namespace koopcert {

/// Runs every regression-theory verification: the sigma_min identity, the
/// Fisher bound (isotropic tightness plus random SPD noise covariances),
/// the deterministic ridge bound, the Monte Carlo least-squares risk bound,
/// the population-to-sample spectral gap, and the Schur input-residual
/// interlacing diagnostics on acquired designs.
std::vector<TheoryCheck> run_theory_suite(const HarnessConfig& cfg,
                                          std::uint64_t seed = 0);

void write_theory_csv(const std::vector<TheoryCheck>& checks,
                      const std::filesystem::path& path);

}  // namespace koopcert
