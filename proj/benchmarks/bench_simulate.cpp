// Times the parallel path loop against the serial reference and checks that
// the two produce bitwise-identical estimates.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "sfm/simulate.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace sfm;

namespace {

double run(const SfmModel& model, SimConfig cfg, bool parallel, double& value) {
    cfg.parallel = parallel;
    const auto start = std::chrono::steady_clock::now();
    const auto est = sim_boundary_probability(model, cfg, 40.0);
    const auto stop = std::chrono::steady_clock::now();
    value = est[1].value;
    return std::chrono::duration<double>(stop - start).count();
}

} // namespace

int main(int argc, char** argv) {
    const long paths = argc > 1 ? std::atol(argv[1]) : 2000000;

    RMat T(2, 2);
    T << -1.0, 1.0, 0.5, -0.5;
    RVec c(2);
    c << 1.0, -1.0;
    const SfmModel model = make_model(T, c);

    SimConfig cfg;
    cfg.seed = 7;
    cfg.paths = paths;
    cfg.horizon = 50.0;
    cfg.z = 1.0;
    cfg.g = RVec::Zero(2);
    cfg.g(1) = 1.0;

#ifdef _OPENMP
    const int threads = omp_get_max_threads();
#else
    const int threads = 1;
#endif
    double vp = 0, vs = 0;
    const double tp = run(model, cfg, true, vp);
    const double ts = run(model, cfg, false, vs);
    std::printf("paths: %ld, threads: %d\n", paths, threads);
    std::printf("parallel: %8.3f s  (%.2fM paths/s)\n", tp, paths / tp / 1e6);
    std::printf("serial:   %8.3f s  (%.2fM paths/s)\n", ts, paths / ts / 1e6);
    std::printf("speedup:  %8.2fx\n", ts / tp);
    if (vp != vs) {
        std::printf("FAIL: parallel and serial estimates differ (%.17g vs %.17g)\n",
                    vp, vs);
        return 1;
    }
    std::printf("estimates identical: %.12f\n", vp);
    return 0;
}
