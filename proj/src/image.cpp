#include "tomo/image.hpp"

#include <numeric>

namespace tomo {

double Image::mean() const {
  if (data.empty()) return 0.0;
  return std::accumulate(data.begin(), data.end(), 0.0) / static_cast<double>(data.size());
}

}  // namespace tomo
