// Benchmark of the replication-level parallel kernels against the serial
// reference (the same code ran with one thread). Substreamed RNG makes the
// results bit-identical for any thread count, which is asserted here.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "wgf/experiments.hpp"
#include "wgf/langevin.hpp"
#include "wgf/potential.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace

int main(int argc, char** argv) {
    int reps = 2000;
    uint64_t seed = 7;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--reps") == 0 && i + 1 < argc)
            reps = std::atoi(argv[++i]);
        else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc)
            seed = std::strtoull(argv[++i], nullptr, 10);
    }
    const int workers = max_threads();
    std::printf("replications: %d, hardware threads: %d\n", reps, workers);

    // Time-average variance kernel.
    set_threads(1);
    auto t0 = std::chrono::steady_clock::now();
    wgf::Prop53Row serial = wgf::prop53_variance(1.0, 0.01, reps, seed);
    double ts = seconds_since(t0);
    set_threads(workers);
    t0 = std::chrono::steady_clock::now();
    wgf::Prop53Row parallel = wgf::prop53_variance(1.0, 0.01, reps, seed);
    double tp = seconds_since(t0);
    bool same = std::memcmp(&serial.variance, &parallel.variance, sizeof(double)) == 0;
    std::printf("time-average variance   serial %.3fs  parallel %.3fs  speedup %.2fx  %s\n",
                ts, tp, ts / tp, same ? "bit-identical" : "MISMATCH");
    if (!same) return 1;

    // Batch sampling kernel.
    wgf::QuadraticPotential pot(1);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
    set_threads(1);
    t0 = std::chrono::steady_clock::now();
    wgf::BatchSet bs = wgf::sample_batches(pot, theta, 1.0, 1.0, reps, 200, 0,
                                           wgf::InitialLaw::stationary(), seed);
    ts = seconds_since(t0);
    set_threads(workers);
    t0 = std::chrono::steady_clock::now();
    wgf::BatchSet bp = wgf::sample_batches(pot, theta, 1.0, 1.0, reps, 200, 0,
                                           wgf::InitialLaw::stationary(), seed);
    tp = seconds_since(t0);
    same = true;
    for (int b = 0; b < bs.m() && same; ++b)
        same = std::memcmp(bs.batches[size_t(b)].obs.data(), bp.batches[size_t(b)].obs.data(),
                           sizeof(double) * size_t(bs.batches[size_t(b)].obs.size())) == 0;
    std::printf("batch sampling          serial %.3fs  parallel %.3fs  speedup %.2fx  %s\n",
                ts, tp, ts / tp, same ? "bit-identical" : "MISMATCH");
    if (!same) return 1;

    // Estimator calibration kernel.
    set_threads(1);
    t0 = std::chrono::steady_clock::now();
    wgf::CltResult cs = wgf::run_clt_offline(0.0, 1.0, 500, reps, seed);
    ts = seconds_since(t0);
    set_threads(workers);
    t0 = std::chrono::steady_clock::now();
    wgf::CltResult cp = wgf::run_clt_offline(0.0, 1.0, 500, reps, seed);
    tp = seconds_since(t0);
    same = cs.z.size() == cp.z.size() &&
           std::memcmp(cs.z.data(), cp.z.data(), sizeof(double) * cs.z.size()) == 0;
    std::printf("offline CLT calibration serial %.3fs  parallel %.3fs  speedup %.2fx  %s\n",
                ts, tp, ts / tp, same ? "bit-identical" : "MISMATCH");
    return same ? 0 : 1;
}
