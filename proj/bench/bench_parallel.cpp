// Serial vs OpenMP timings for the parallel kernels.

#include "finslercaps/convex_body.hpp"
#include "finslercaps/geodesics.hpp"
#include "finslercaps/smoothing.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace finslercaps;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

Mat circle_directions(int n) {
    Mat d(2, n);
    for (int k = 0; k < n; ++k) {
        const double t = 2.0 * M_PI * k / n;
        d(0, k) = std::cos(t);
        d(1, k) = std::sin(t);
    }
    return d;
}

ConvexBody shifted_ellipse() {
    Vec c(2);
    c << 0.2, -0.1;
    return ConvexBody::ellipsoid((Mat(2, 2) << 1.5, 0.4, 0.4, 0.8).finished(), c);
}

void BM_SupportBatch(benchmark::State& state) {
    std::vector<Vec> pts;
    for (int k = 0; k < 64; ++k) {
        const double t = 2.0 * M_PI * k / 64.0;
        Vec p(2);
        p << std::cos(t), 0.6 * std::sin(t);
        pts.push_back(p);
    }
    const ConvexBody U = ConvexBody::polytope_from_vertices(pts);
    const Mat dirs = circle_directions(1 << 16);
    for (auto _ : state) benchmark::DoNotOptimize(support_batch(U, dirs, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * dirs.cols());
}

void BM_VerifyModification(benchmark::State& state) {
    const ModifiedLagrangian L(FinslerMetric(shifted_ellipse()), 0.1);
    ModificationCheck chk;
    chk.samples = 20000;
    chk.hessian_samples = 2000;
    chk.dual_samples = 400;
    for (auto _ : state) benchmark::DoNotOptimize(verify_modification(L, chk, 1, exec_of(state)));
}

void BM_MinimalLength(benchmark::State& state) {
    IntVec e1 = IntVec::Zero(2);
    e1(1) = 1;
    const FinslerMetric F(shifted_ellipse(), FourierField(2, {{e1, 0.2, 0.0}}));
    IntVec a(2);
    a << 1, 1;
    GeodesicOptions o;
    o.N = 128;
    o.multistart = 8;
    o.exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(minimal_length(F, a, o));
}

} // namespace

BENCHMARK(BM_SupportBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VerifyModification)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MinimalLength)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
