#pragma once

namespace tomo {

// Selects between the OpenMP kernels and their serial counterparts. Both
// produce bit-identical results; the serial path exists for testing and for
// benchmarking the parallel speed-up.
enum class Execution { serial, parallel };

// Sets the OpenMP worker count; values < 1 leave the runtime default.
void set_worker_threads(int threads);
int worker_threads();

}  // namespace tomo
