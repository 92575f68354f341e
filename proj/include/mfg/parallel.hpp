#pragma once

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mfg {

// Thread budget for the OpenMP kernels. MFG_IRL_THREADS caps it; unset or
// invalid values fall back to the OpenMP default.
inline int thread_limit() {
#ifdef _OPENMP
    int cap = omp_get_max_threads();
    if (const char* s = std::getenv("MFG_IRL_THREADS")) {
        const int v = std::atoi(s);
        if (v >= 1 && v < cap) cap = v;
    }
    return cap;
#else
    return 1;
#endif
}

}  // namespace mfg
