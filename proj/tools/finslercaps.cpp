// finslercaps command-line frontend.
//
// Exit status: 0 success, 1 a verify suite failed, 2 domain / configuration
// errors (including malformed JSON and bad flags), 3 numerical failures,
// 4 output could not be written.

#include "finslercaps/capacities.hpp"
#include "finslercaps/errors.hpp"
#include "finslercaps/geodesics.hpp"
#include "finslercaps/hamiltonian.hpp"
#include "finslercaps/io.hpp"
#include "finslercaps/log.hpp"
#include "finslercaps/parallel.hpp"
#include "finslercaps/smoothing.hpp"
#include "finslercaps/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

using namespace finslercaps;

namespace {

struct Common {
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out = "-";
    std::string format = "csv";
    bool stamp = false;

    Exec exec() const { return jobs > 1 ? Exec::Parallel : Exec::Serial; }
};

// Options excluded from the configuration hash: they never change the numbers.
const std::set<std::string> kUnhashed{"--jobs", "--out", "--stamp", "--help"};
const std::set<std::string> kFileOptions{"--body", "--metric", "--profile", "--potential"};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--seed", c.seed, "Global seed for randomized initializations");
    sub->add_option("--jobs", c.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);
    sub->add_option("--out", c.out, "Output path ('-' for stdout)");
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--stamp", c.stamp, "Add a timestamp to the provenance header");
}

std::uint64_t config_hash(const CLI::App* sub) {
    std::vector<std::string> items;
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_name();
        if (kUnhashed.count(name)) continue;
        std::string value;
        if (opt->count() > 0) {
            // Sweep lists are sets: their order does not change the output.
            auto results = opt->results();
            std::sort(results.begin(), results.end());
            for (const auto& r : results) value += r + ";";
        } else {
            value = opt->get_default_str();
        }
        items.push_back(name + "=" + value);
        if (kFileOptions.count(name) && opt->count() > 0)
            for (const auto& r : opt->results()) items.push_back(name + ":" + read_text_file(r));
    }
    std::sort(items.begin(), items.end());
    std::string joined = sub->get_name();
    for (const auto& s : items) joined += "\n" + s;
    return fnv1a(joined);
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find(',', pos), text.size());
        const std::string tok = text.substr(pos, end - pos);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (tok.empty() || used != tok.size()) throw DomainError(what + ": cannot parse \"" + text + "\"");
        out.push_back(v);
        pos = end + 1;
    }
    return out;
}

Vec parse_vec(const std::string& text, const std::string& what) {
    const auto v = parse_list(text, what);
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

IntVec parse_class(const std::string& text) {
    const auto v = parse_list(text, "--alpha");
    IntVec a(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] != std::round(v[i]) || std::abs(v[i]) > 1e9) throw DomainError("--alpha: entries must be integers");
        a(static_cast<Eigen::Index>(i)) = static_cast<int>(v[i]);
    }
    return a;
}

std::vector<IntVec> parse_classes(const std::vector<std::string>& texts) {
    std::vector<IntVec> out;
    for (const auto& t : texts) out.push_back(parse_class(t));
    std::sort(out.begin(), out.end(), [](const IntVec& a, const IntVec& b) {
        return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
    });
    return out;
}

Json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
Json to_json(const IntVec& v) { return std::vector<int>(v.data(), v.data() + v.size()); }

std::string id_of(const std::string& path) { return std::filesystem::path(path).filename().string(); }

// Either --metric or --body (flat metric).
struct MetricSource {
    std::string metric;
    std::string body;

    void add(CLI::App* sub) {
        auto* m = sub->add_option("--metric", metric, "Metric JSON file");
        auto* b = sub->add_option("--body", body, "Body JSON file (flat metric)");
        m->excludes(b);
    }
    FinslerMetric load() const {
        if (!metric.empty()) return metric_from_json(read_json_file(metric));
        if (!body.empty()) return FinslerMetric(body_from_json(read_json_file(body)));
        throw DomainError("one of --metric or --body is required");
    }
};

RadialProfile load_profile(const std::string& path) {
    return path.empty() ? RadialProfile::quadratic(1.0) : profile_from_json(read_json_file(path));
}

void check_dim(const IntVec& a, int n) {
    if (a.size() != n) throw DomainError("--alpha: class dimension does not match the metric");
}

// Renders CSV with the provenance header, or JSON {"provenance", "result"}.
struct Output {
    std::optional<CsvTable> table;
    Json result;
};

std::string render(const Output& o, const Common& c, const Provenance& prov) {
    if (c.format == "json") {
        Json doc = {{"provenance", prov.to_json()}, {"result", o.result}};
        return doc.dump(2) + "\n";
    }
    if (!o.table) throw DomainError("csv output is not available for this command");
    return o.table->render(prov);
}

// capacity ------------------------------------------------------------------------

struct CapacityCmd {
    std::vector<std::string> bodies, metrics, alphas;
    int N = 256;
    double tol = 1e-8;
    int multistart = 4;
    bool no_cross_check = false;

    void add(CLI::App* sub) {
        sub->add_option("--body", bodies, "Body JSON file (repeatable)")->allow_extra_args(false);
        sub->add_option("--metric", metrics, "Metric JSON file (repeatable)")->allow_extra_args(false);
        sub->add_option("--alpha", alphas, "Class a1,...,an (repeatable)")->required()->allow_extra_args(false);
        sub->add_option("--N", N, "Loop samples for the variational path")->check(CLI::Range(16, 1 << 20));
        sub->add_option("--tol", tol, "Gradient tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--multistart", multistart, "Variational starts")->check(CLI::Range(1, 10000));
        sub->add_flag("--no-cross-check", no_cross_check, "Skip the variational cross-check of closed forms");
    }

    Output run(const Common& c) const {
        if (bodies.empty() && metrics.empty()) throw DomainError("capacity: --body or --metric is required");
        struct Source {
            std::string id;
            bool is_metric;
            std::string path;
        };
        std::vector<Source> sources;
        for (const auto& b : bodies) sources.push_back({id_of(b), false, b});
        for (const auto& m : metrics) sources.push_back({id_of(m), true, m});
        std::stable_sort(sources.begin(), sources.end(), [](const Source& a, const Source& b) { return a.id < b.id; });
        const auto classes = parse_classes(alphas);

        std::vector<std::pair<std::size_t, std::size_t>> jobs;
        for (std::size_t s = 0; s < sources.size(); ++s)
            for (std::size_t a = 0; a < classes.size(); ++a) jobs.emplace_back(s, a);
        std::vector<FinslerMetric> loaded;
        for (const auto& s : sources)
            loaded.push_back(s.is_metric ? metric_from_json(read_json_file(s.path))
                                         : FinslerMetric(body_from_json(read_json_file(s.path))));

        CapacityOptions opts;
        opts.cross_check = !no_cross_check;
        opts.geodesic.N = N;
        opts.geodesic.tol = tol;
        opts.geodesic.multistart = multistart;
        opts.geodesic.seed = c.seed;
        const auto results = parallel_map(jobs.size(), c.exec(), [&](std::size_t i) {
            const auto& [s, a] = jobs[i];
            check_dim(classes[a], loaded[s].dim());
            return sources[s].is_metric ? bps_capacity(loaded[s], classes[a], opts)
                                        : bps_capacity(loaded[s].body(), classes[a], opts);
        });

        Output o;
        o.table.emplace(std::vector<std::string>{"body-id", "alpha", "value-or-threshold", "witness-length", "method"});
        o.result = Json::array();
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            const auto& [s, a] = jobs[i];
            const CapacityResult& r = results[i];
            const double threshold = r.evidence ? r.evidence->threshold : kUnboundedThreshold;
            const std::string value = r.value ? format_number(*r.value) : ">" + format_number(threshold);
            const std::string witness = std::isnan(r.variational) ? "" : format_number(r.variational);
            o.table->add_row({sources[s].id, format_class(classes[a]), value, witness, method_name(r.method)});
            Json j = {{"body", sources[s].id},
                      {"alpha", to_json(classes[a])},
                      {"exceeds_threshold", r.exceeds_threshold()},
                      {"method", method_name(r.method)}};
            j["value"] = r.value ? Json(*r.value) : Json(nullptr);
            if (!r.value) j["threshold"] = threshold;
            j["witness_length"] = std::isnan(r.variational) ? Json(nullptr) : Json(r.variational);
            o.result.push_back(j);
        }
        return o;
    }
};

// geodesic / spectrum -----------------------------------------------------------

struct GeodesicCmd {
    MetricSource src;
    std::string alpha;
    int N = 256;
    double tol = 1e-8;
    int multistart = 16;

    void add(CLI::App* sub) {
        src.add(sub);
        sub->add_option("--alpha", alpha, "Class a1,...,an")->required();
        sub->add_option("--N", N, "Loop samples")->check(CLI::Range(16, 1 << 20));
        sub->add_option("--tol", tol, "Gradient tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--multistart", multistart, "Randomized starts")->check(CLI::Range(1, 10000));
    }

    Output run(const Common& c) const {
        const FinslerMetric F = src.load();
        const IntVec a = parse_class(alpha);
        check_dim(a, F.dim());
        GeodesicOptions g;
        g.N = N;
        g.tol = tol;
        g.multistart = multistart;
        g.seed = c.seed;
        g.exec = c.exec();
        const MinimalLength m = minimal_length(F, a, g);
        const GeodesicResult& w = m.witness;
        const Mat& s = w.loop.samples();

        Output o;
        std::vector<std::string> cols{"k"};
        for (int i = 0; i < F.dim(); ++i) cols.push_back("x" + std::to_string(i + 1));
        o.table.emplace(cols);
        Json samples = Json::array();
        for (int k = 0; k < s.cols(); ++k) {
            std::vector<std::string> row{std::to_string(k)};
            for (int i = 0; i < s.rows(); ++i) row.push_back(format_number(s(i, k)));
            o.table->add_row(row);
            samples.push_back(to_json(Vec(s.col(k))));
        }
        o.result = {{"alpha", to_json(a)},
                    {"value", m.value},
                    {"optimizer_value", m.optimizer_value},
                    {"closed_form", m.closed_form},
                    {"converged_runs", m.converged_runs},
                    {"witness",
                     {{"length", w.length},
                      {"energy", w.energy},
                      {"grad_norm", w.grad_norm},
                      {"speed_variance", w.speed_variance},
                      {"iterations", w.iterations},
                      {"converged", w.converged},
                      {"hit_nonsmooth", w.hit_nonsmooth},
                      {"N", s.cols()},
                      {"samples", samples}}}};
        return o;
    }
};

struct SpectrumCmd {
    MetricSource src;
    std::vector<std::string> alphas;
    int N = 128;
    double tol = 1e-8;
    int budget = 32;
    double resolution = 1e-4;

    void add(CLI::App* sub) {
        src.add(sub);
        sub->add_option("--alpha", alphas, "Class a1,...,an (repeatable)")->required()->allow_extra_args(false);
        sub->add_option("--N", N, "Loop samples")->check(CLI::Range(16, 1 << 20));
        sub->add_option("--tol", tol, "Gradient tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--budget", budget, "Randomized starts per class")->check(CLI::Range(1, 100000));
        sub->add_option("--resolution", resolution, "Merge distance for lengths")->check(CLI::PositiveNumber);
    }

    Output run(const Common& c) const {
        const FinslerMetric F = src.load();
        const auto classes = parse_classes(alphas);
        for (const auto& a : classes) check_dim(a, F.dim());
        GeodesicOptions g;
        g.N = N;
        g.tol = tol;
        g.seed = c.seed;
        const auto samples = parallel_map(classes.size(), c.exec(), [&](std::size_t i) {
            return spectrum_sample(F, classes[i], budget, g, resolution);
        });
        Output o;
        o.table.emplace(std::vector<std::string>{"alpha", "length", "multiplicity", "converged", "budget"});
        o.result = Json::array();
        for (std::size_t i = 0; i < classes.size(); ++i) {
            const auto& s = samples[i];
            for (std::size_t k = 0; k < s.lengths.size(); ++k)
                o.table->add_row({format_class(classes[i]), format_number(s.lengths[k]), std::to_string(s.multiplicity[k]),
                                  std::to_string(s.converged), std::to_string(s.budget)});
            o.result.push_back({{"alpha", to_json(classes[i])},
                                {"lengths", s.lengths},
                                {"multiplicity", s.multiplicity},
                                {"converged", s.converged},
                                {"budget", s.budget}});
        }
        return o;
    }
};

// flow / orbit --------------------------------------------------------------------

Scheme parse_scheme(const std::string& s) { return s == "yoshida4" ? Scheme::Yoshida4 : Scheme::Midpoint; }

struct FlowCmd {
    MetricSource src;
    std::string profile, x0 = "0,0", y0 = "1,0", scheme = "midpoint";
    double T = 1.0, dt = 1e-3;
    int stride = 10;

    void add(CLI::App* sub) {
        src.add(sub);
        sub->add_option("--profile", profile, "Radial profile JSON file (default f(r) = r^2)");
        sub->add_option("--x0", x0, "Initial base point");
        sub->add_option("--y0", y0, "Initial momentum");
        sub->add_option("--T", T, "Duration (signed)");
        sub->add_option("--dt", dt, "Step size in (0, 1e-2]")->check(CLI::Range(1e-12, 1e-2));
        sub->add_option("--scheme", scheme, "Integrator")->check(CLI::IsMember({"midpoint", "yoshida4"}));
        sub->add_option("--stride", stride, "Record every stride-th step")->check(CLI::PositiveNumber);
    }

    Output run(const Common&) const {
        const RadialSystem sys{src.load(), load_profile(profile)};
        const int n = sys.metric.dim();
        const Vec x = parse_vec(x0, "--x0"), y = parse_vec(y0, "--y0");
        if (x.size() != n || y.size() != n) throw DomainError("flow: --x0 / --y0 dimension does not match the metric");
        IntegratorOptions io;
        io.dt = dt;
        io.scheme = parse_scheme(scheme);
        Vec z0(2 * n);
        z0 << x, y;
        const Trajectory tr = integrate(radial_hamiltonian(sys), z0, T, io, co_metric_squared(sys.metric));

        std::vector<std::string> cols{"t"};
        for (int i = 0; i < n; ++i) cols.push_back("x" + std::to_string(i + 1));
        for (int i = 0; i < n; ++i) cols.push_back("y" + std::to_string(i + 1));
        cols.push_back("H");
        cols.push_back("Fstar2");
        Output o;
        o.table.emplace(cols);
        Json rows = Json::array();
        const int last = static_cast<int>(tr.z.cols()) - 1;
        for (int k = 0; k <= last; ++k) {
            if (k % stride != 0 && k != last) continue;
            std::vector<std::string> row{format_number(tr.t[k])};
            for (int i = 0; i < 2 * n; ++i) row.push_back(format_number(tr.z(i, k)));
            row.push_back(format_number(tr.energy(k)));
            row.push_back(format_number(tr.monitor(k)));
            o.table->add_row(row);
            rows.push_back({{"t", tr.t[k]}, {"z", to_json(Vec(tr.z.col(k)))}, {"H", tr.energy(k)}, {"Fstar2", tr.monitor(k)}});
        }
        o.result = {{"max_drift", tr.max_drift}, {"drift_rate", tr.drift_rate}, {"halvings", tr.halvings}, {"samples", rows}};
        return o;
    }
};

struct OrbitCmd {
    MetricSource src;
    std::string profile;
    std::vector<std::string> alphas;
    double dt = 1e-3, tol = 1e-10;
    int samples = 1000;

    void add(CLI::App* sub) {
        src.add(sub);
        sub->add_option("--profile", profile, "Radial profile JSON file (default f(r) = r^2)");
        sub->add_option("--alpha", alphas, "Class a1,...,an (repeatable)")->required()->allow_extra_args(false);
        sub->add_option("--dt", dt, "Step size in (0, 1e-2]")->check(CLI::Range(1e-12, 1e-2));
        sub->add_option("--tol", tol, "Closure tolerance for shooting")->check(CLI::PositiveNumber);
        sub->add_option("--samples", samples, "Samples per orbit")->check(CLI::Range(16, 1 << 20));
    }

    struct Found {
        IntVec alpha;
        std::string method;
        PeriodicOrbit orbit;
        double action_numeric;
    };

    std::vector<Found> solve(const RadialSystem& sys, const IntVec& a, Exec exec) const {
        IntegratorOptions io;
        io.dt = dt;
        if (sys.metric.flat()) {
            PeriodicOrbit analytic = radial_orbit(sys, a, Vec::Zero(sys.metric.dim()), samples);
            if (!sys.metric.smooth()) return {{a, "analytic", analytic, analytic.action}};
            // Integrate the analytic initial state and measure closure.
            const HamiltonianSystem H = radial_hamiltonian(sys);
            const Trajectory tr = integrate(H, analytic.samples.col(0), 1.0, io);
            PeriodicOrbit num = analytic;
            num.samples = tr.z;
            Vec target = analytic.samples.col(0);
            target.head(a.size()) += to_real(a);
            num.closure_residual = (tr.z.col(tr.z.cols() - 1) - target).cwiseAbs().maxCoeff();
            num.energy = tr.energy;
            num.action = analytic.action;
            return {{a, "integrated", num, action(H, num)}};
        }
        // Curved metric: shooting seeded by the Legendre lift of the shortest
        // closed geodesic, y = r l_x(v) / F(x, v) with f'(r) = length.
        GeodesicOptions g;
        g.N = 256;
        g.multistart = 4;
        const MinimalLength m = minimal_length(sys.metric, a, g);
        const Mat& s = m.witness.loop.samples();
        const int N = static_cast<int>(s.cols());
        const Vec x0 = s.col(0);
        const Vec v = 0.5 * N * (s.col(1) - s.col(N - 1) + to_real(a));
        const double r = first_slope_point(sys.f, m.value);
        Vec z0(2 * x0.size());
        z0 << x0, r * sys.metric.legendre(x0, v) / sys.metric.eval(x0, v);
        ShootingOptions so;
        so.integrator = io;
        so.tol = tol;
        so.samples = samples;
        so.exec = exec;
        const HamiltonianSystem H = radial_hamiltonian(sys);
        std::vector<Found> out;
        for (const auto& orb : find_periodic_orbit(H, a, {z0}, so))
            out.push_back({a, "shooting", orb, orb.action});
        return out;
    }

    Output run(const Common& c) const {
        const RadialSystem sys{src.load(), load_profile(profile)};
        const int n = sys.metric.dim();
        const auto classes = parse_classes(alphas);
        for (const auto& a : classes) check_dim(a, n);
        const auto found = parallel_map(classes.size(), c.exec(), [&](std::size_t i) {
            return solve(sys, classes[i], Exec::Serial);
        });
        std::vector<std::string> cols{"alpha", "index", "method", "action", "energy", "closure-residual"};
        for (int i = 0; i < n; ++i) cols.push_back("x" + std::to_string(i + 1));
        for (int i = 0; i < n; ++i) cols.push_back("y" + std::to_string(i + 1));
        Output o;
        o.table.emplace(cols);
        o.result = Json::array();
        for (const auto& list : found) {
            for (std::size_t k = 0; k < list.size(); ++k) {
                const Found& f = list[k];
                const double energy = f.orbit.energy.size() ? f.orbit.energy(0) : std::nan("");
                std::vector<std::string> row{format_class(f.alpha), std::to_string(k), f.method, format_number(f.action_numeric),
                                             format_number(energy), format_number(f.orbit.closure_residual)};
                for (int i = 0; i < 2 * n; ++i) row.push_back(format_number(f.orbit.samples(i, 0)));
                o.table->add_row(row);
                o.result.push_back({{"class", to_json(f.alpha)},
                                    {"method", f.method},
                                    {"action", f.action_numeric},
                                    {"action_formula", f.orbit.action},
                                    {"energy", energy},
                                    {"period", f.orbit.period},
                                    {"closure_residual", f.orbit.closure_residual},
                                    {"x0", to_json(f.orbit.x(0))},
                                    {"y0", to_json(f.orbit.y(0))}});
            }
        }
        return o;
    }
};

// modify --------------------------------------------------------------------------

struct ModifyCmd {
    MetricSource src;
    std::vector<double> etas{1.0, 0.1, 0.01};
    std::int64_t samples = 100000, hessian_samples = 10000, dual_samples = 2000;

    void add(CLI::App* sub) {
        src.add(sub);
        sub->add_option("--eta", etas, "Modification levels (repeatable)")
            ->check(CLI::PositiveNumber)
            ->allow_extra_args(false);
        sub->add_option("--samples", samples, "Sandwich samples")->check(CLI::PositiveNumber);
        sub->add_option("--hessian-samples", hessian_samples, "Hessian samples")->check(CLI::PositiveNumber);
        sub->add_option("--dual-samples", dual_samples, "Dual Hamiltonian samples")->check(CLI::PositiveNumber);
    }

    Output run(const Common& c) const {
        const FinslerMetric F = src.load();
        std::vector<double> levels = etas;
        std::sort(levels.begin(), levels.end(), std::greater<>());
        ModificationCheck chk;
        chk.samples = samples;
        chk.hessian_samples = hessian_samples;
        chk.dual_samples = dual_samples;
        Output o;
        o.table.emplace(std::vector<std::string>{"eta", "quantity", "value"});
        o.result = Json::array();
        for (std::size_t k = 0; k < levels.size(); ++k) {
            const ModifiedLagrangian L(F, levels[k]);
            const ModificationReport r = verify_modification(L, chk, c.seed + k, c.exec());
            const std::string e = format_number(levels[k]);
            const std::vector<std::pair<std::string, double>> q{
                {"samples", static_cast<double>(r.samples)},
                {"sandwich_violations", static_cast<double>(r.sandwich_violations)},
                {"equality_violations", static_cast<double>(r.equality_violations)},
                {"dual_violations", static_cast<double>(r.dual_violations)},
                {"dual_checked", static_cast<double>(r.dual_checked)},
                {"max_sandwich_excess", r.max_sandwich_excess},
                {"max_equality_error", r.max_equality_error},
                {"min_hessian_eig", r.min_hessian_eig},
                {"max_hessian_norm", r.max_hessian_norm},
                {"max_dual_rel_error", r.max_dual_rel_error},
                {"ok", r.ok() ? 1.0 : 0.0}};
            Json j = {{"eta", levels[k]}};
            for (const auto& [name, v] : q) {
                o.table->add_row({e, name, format_number(v)});
                j[name] = v;
            }
            Json hist = Json::array();
            for (std::size_t b = 0; b < r.hist_counts.size(); ++b) {
                o.table->add_row({e,
                                  "hessian_eig_hist[" + format_number(r.hist_edges[b]) + ";" +
                                      format_number(r.hist_edges[b + 1]) + ")",
                                  std::to_string(r.hist_counts[b])});
                hist.push_back({{"lo", r.hist_edges[b]}, {"hi", r.hist_edges[b + 1]}, {"count", r.hist_counts[b]}});
            }
            j["hessian_eig_histogram"] = hist;
            o.result.push_back(j);
        }
        return o;
    }
};

// lorentz -------------------------------------------------------------------------

struct LorentzCmd {
    std::string alpha = "2,1", potential;
    double emin = 0.5, emax = 1.5, tol = 1e-10;
    int levels = 10, steps = 1000;

    void add(CLI::App* sub) {
        sub->add_option("--alpha", alpha, "Class a1,...,an with a1 > |a'|");
        sub->add_option("--potential", potential,
                        "Potential JSON file {\"fourier\": [[k, cos, sin], ...]} (default cos(2 pi q1) - 1)");
        sub->add_option("--emin", emin, "Lower end of the energy window");
        sub->add_option("--emax", emax, "Upper end of the energy window");
        sub->add_option("--levels", levels, "Sampled energy levels")->check(CLI::Range(1, 10000));
        sub->add_option("--steps", steps, "Integrator steps per period")->check(CLI::Range(100, 1 << 24));
        sub->add_option("--tol", tol, "Closure tolerance")->check(CLI::PositiveNumber);
    }

    Output run(const Common& c) const {
        const IntVec a = parse_class(alpha);
        const int n = static_cast<int>(a.size());
        if (n < 2) throw DomainError("lorentz: dimension must be at least 2");
        if (!(emin < emax)) throw DomainError("lorentz: --emin must be below --emax");
        FourierField V;
        if (potential.empty()) {
            IntVec e1 = IntVec::Zero(n);
            e1(0) = 1;
            V = FourierField(n, {{e1, 1.0, 0.0}, {IntVec::Zero(n), -1.0, 0.0}});
        } else {
            const Json j = read_json_file(potential);
            if (!j.is_object() || j.size() != 1 || !j.contains("fourier"))
                throw DomainError("potential: expected {\"fourier\": [...]}");
            V = fourier_from_json(j["fourier"], n);
        }
        const LorentzSystem L = lorentz_system(V);
        LorentzSearchOptions so;
        so.levels = levels;
        so.steps = steps;
        so.tol = tol;
        so.exec = c.exec();
        const auto found = lorentz_orbit_search(L, a, emin, emax, so);

        Output o;
        std::vector<std::string> cols{"energy", "orbits", "closure-residual", "period", "action"};
        for (int i = 0; i < n; ++i) cols.push_back("p" + std::to_string(i + 1));
        o.table.emplace(cols);
        Json lv = Json::array();
        int hit = 0;
        for (const auto& level : found) {
            hit += level.orbits.empty() ? 0 : 1;
            Json orbits = Json::array();
            std::vector<std::string> row{format_number(level.energy), std::to_string(level.orbits.size())};
            if (level.orbits.empty()) {
                row.insert(row.end(), 3 + n, "");
            } else {
                const PeriodicOrbit& b = level.orbits.front();
                row.push_back(format_number(b.closure_residual));
                row.push_back(format_number(b.period));
                row.push_back(format_number(b.action));
                for (int i = 0; i < n; ++i) row.push_back(format_number(b.y(0)(i)));
            }
            o.table->add_row(row);
            for (const auto& b : level.orbits)
                orbits.push_back({{"class", to_json(b.winding)},
                                  {"period", b.period},
                                  {"closure_residual", b.closure_residual},
                                  {"action", b.action},
                                  {"energy", level.energy},
                                  {"p0", to_json(b.y(0))}});
            lv.push_back({{"energy", level.energy}, {"orbits", orbits}});
        }
        o.result = {{"alpha", to_json(a)}, {"levels_with_orbits", hit}, {"levels", lv}};
        return o;
    }
};

// squeeze -------------------------------------------------------------------------

struct SqueezeCmd {
    std::string matrix, body;
    double r = 0.1;
    int max_iterations = 10000;

    void add(CLI::App* sub) {
        sub->add_option("--matrix", matrix, "Row-major integer matrix a11,a12,...")->required();
        sub->add_option("--r", r, "Slab half-width")->check(CLI::PositiveNumber);
        sub->add_option("--body", body, "Fiber body JSON file (default [-1, 1]^n)");
        sub->add_option("--max-iterations", max_iterations, "Iteration cap")->check(CLI::PositiveNumber);
    }

    Output run(const Common&) const {
        const auto m = parse_list(matrix, "--matrix");
        const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m.size()))));
        if (n * n != static_cast<int>(m.size()) || n < 1) throw DomainError("--matrix: expected n^2 entries");
        Mat A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = m[static_cast<std::size_t>(i * n + j)];
        const ConvexBody U = body.empty() ? ConvexBody::box(Vec::Ones(n)) : body_from_json(read_json_file(body));
        if (U.dim() != n) throw DomainError("squeeze: body dimension does not match the matrix");
        const SqueezeResult s = squeeze_min_iterations(A, U, r, max_iterations);

        Output o;
        o.table.emplace(std::vector<std::string>{"quantity", "value"});
        o.table->add_row({"iterations", std::to_string(s.iterations)});
        o.table->add_row({"predicted", std::to_string(s.predicted)});
        o.table->add_row({"verified", s.verified ? "1" : "0"});
        o.table->add_row({"lambda", format_number(s.lambda)});
        for (std::size_t k = 0; k < s.widths.size(); ++k)
            o.table->add_row({"width[" + std::to_string(k) + "]", format_number(s.widths[k])});
        o.result = {{"iterations", s.iterations},
                    {"predicted", s.predicted},
                    {"verified", s.verified},
                    {"lambda", s.lambda},
                    {"direction", to_json(s.direction)},
                    {"widths", s.widths}};
        return o;
    }
};

// verify --------------------------------------------------------------------------

struct VerifyCmd {
    std::string suite = "all";
    bool failed = false;

    void add(CLI::App* sub) {
        std::vector<std::string> names = suite_names();
        names.push_back("all");
        sub->add_option("--suite", suite, "Invariant suite")->check(CLI::IsMember(names));
    }

    Output run(const Common& c) {
        const auto results = run_suites(suite, {c.seed, c.exec()});
        Output o;
        o.table.emplace(std::vector<std::string>{"suite", "quantity", "value"});
        o.result = Json::array();
        for (const auto& r : results) {
            failed = failed || !r.passed;
            o.table->add_row({r.name, "passed", r.passed ? "1" : "0"});
            o.table->add_row({r.name, "trials", std::to_string(r.trials)});
            o.table->add_row({r.name, "violations", std::to_string(r.violations)});
            o.table->add_row({r.name, "max_error", format_number(r.max_error)});
            Json metrics = Json::object();
            for (const auto& [k, v] : r.metrics) {
                o.table->add_row({r.name, k, format_number(v)});
                metrics[k] = v;
            }
            o.result.push_back({{"suite", r.name},
                                {"passed", r.passed},
                                {"trials", r.trials},
                                {"violations", r.violations},
                                {"max_error", r.max_error},
                                {"metrics", metrics}});
        }
        return o;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finsler metrics, closed geodesics and capacities on tori"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    Common common;
    CapacityCmd capacity;
    GeodesicCmd geodesic;
    SpectrumCmd spectrum;
    FlowCmd flow;
    OrbitCmd orbit;
    ModifyCmd modify;
    LorentzCmd lorentz;
    SqueezeCmd squeeze;
    VerifyCmd verify;

    struct Entry {
        CLI::App* app;
        std::function<Output()> run;
    };
    std::vector<Entry> entries;
    auto reg = [&](const char* name, const char* help, auto& cmd) {
        CLI::App* sub = app.add_subcommand(name, help);
        cmd.add(sub);
        add_common(sub, common);
        entries.push_back({sub, [&cmd, &common] { return cmd.run(common); }});
    };
    reg("capacity", "BPS capacities of fiber bodies or metrics", capacity);
    reg("geodesic", "Shortest closed geodesic in a class", geodesic);
    reg("spectrum", "Sample of the marked length spectrum", spectrum);
    reg("flow", "Trajectory of a radial Hamiltonian", flow);
    reg("orbit", "Periodic orbits of a radial Hamiltonian", orbit);
    reg("modify", "Quadratic modification verification report", modify);
    reg("lorentz", "Periodic orbit search for the Lorentzian system", lorentz);
    reg("squeeze", "Cat-map squeezing iterations", squeeze);
    reg("verify", "Run the invariant suites", verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        set_threads(common.jobs);
        for (const auto& e : entries) {
            if (!e.app->parsed()) continue;
            Provenance prov;
            prov.command = e.app->get_name();
            prov.config_hash = config_hash(e.app);
            prov.seed = common.seed;
            if (common.stamp) prov.timestamp = utc_timestamp();
            const Output out = e.run();
            write_output(common.out, render(out, common, prov));
        }
    } catch (const WriteError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return verify.failed ? 1 : 0;
}
