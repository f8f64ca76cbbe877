#pragma once

#include <span>
#include <vector>

#include "tomo/execution.hpp"
#include "tomo/optics.hpp"
#include "tomo/strategy.hpp"

namespace tomo {

// How |P(f)| is reduced over the band.
//  mean:  sum_f V |P| / sum_f V
//  max:   max_f V |P|
//  slice: |P| at a single frequency (linear interpolation on the band grid)
enum class ContrastReduction { mean, max, slice };

struct ContrastOptions {
  ContrastReduction reduction = ContrastReduction::mean;
  double slice_frequency = 6.0;       // cpd, slice mode only
  std::vector<double> target_depths;  // rows; empty uses the layer depths
};

// values[t * accommodation_depths.size() + s]
struct ContrastMap {
  std::vector<double> target_depths;
  std::vector<double> accommodation_depths;
  std::vector<double> values;

  double at(std::size_t target, std::size_t plane) const {
    return values[target * accommodation_depths.size() + plane];
  }
  bool same_grid(const ContrastMap& other) const;
};

// Contrast seen at each accommodation plane of the template's bank when the
// table entry for each target depth is displayed. Normalized so the largest
// cell is 1.
ContrastMap contrast_map(const StrategyTable& table, const ProblemTemplate& problems,
                         const ContrastOptions& options = {}, Execution exec = Execution::parallel);

// Same reduction applied to the ideal single-plane images H(z_s, z_d).
ContrastMap target_contrast_map(const ProblemTemplate& problems, const ContrastOptions& options = {},
                                Execution exec = Execution::parallel);

// Lower-level form: one explicit strategy per target row, on any bank.
ContrastMap contrast_map_from_rows(const OtfBank& bank, std::span<const double> target_depths,
                                   std::span<const IlluminationStrategy> rows, double dc_noise,
                                   std::span<const double> weights, const ContrastOptions& options = {},
                                   Execution exec = Execution::parallel);
ContrastMap ideal_contrast_map(const OtfBank& bank, std::span<const double> target_depths,
                               std::span<const double> weights, const ContrastOptions& options = {},
                               Execution exec = Execution::parallel);

// Signed cellwise target - map. Throws ShapeError when the grids differ.
ContrastMap contrast_error(const ContrastMap& map, const ContrastMap& target);
double summed_magnitude(const ContrastMap& map);

}  // namespace tomo
