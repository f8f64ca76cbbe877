#pragma once

// Straightforward serial implementations of the parallel kernels. They share
// no code paths with the optimized versions beyond the optics, and exist to
// check them in tests and benchmarks.

#include <span>
#include <vector>

#include "tomo/render.hpp"
#include "tomo/simulate.hpp"
#include "tomo/strategy.hpp"

namespace tomo::reference {

// Direct cost() for each individual.
std::vector<double> population_costs(const StrategyProblem& problem, std::span<const IlluminationStrategy> population);

// Per-pixel loop with a linear nearest-layer search.
BacklightSequence render_backlight_sequence(const RgbdScene& scene, const StrategyTable& table,
                                            const SubframeSchedule& schedule);

// Spatial-domain circular convolution on the mirror-extended image, with each
// point-spread function obtained by a direct inverse DFT of the OTF sampled on
// the full frequency grid. Cost grows as (4WH)^2 per depth bin, so this is
// only usable on small images.
Image retinal_image_direct(const BacklightSequence& sequence, double accommodation_depth,
                           const SimulationConfig& config);

}  // namespace tomo::reference
