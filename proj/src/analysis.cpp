#include "iblab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "iblab/logreg.hpp"
#include "iblab/svg.hpp"

namespace iblab::analysis {

using datasets::GaussianSpec;
using datasets::Sample;

std::vector<NeuronSnapshot> snapshot_neurons(const network::TwoLayerNet& net) {
    std::vector<NeuronSnapshot> out(net.width());
    for (std::size_t k = 0; k < net.width(); ++k) {
        const double* wk = net.weights().row(k);
        out[k].id = k;
        out[k].angle = std::atan2(wk[1], wk[0]);
        out[k].norm = norm2(wk, net.dim());
        out[k].head_sign = net.head_signs()[k];
    }
    return out;
}

std::vector<Vec> limit_directions(const network::TwoLayerNet& net, long long steps) {
    if (steps < 1) throw std::invalid_argument("limit_directions: steps < 1");
    std::vector<Vec> out(net.width());
    const double inv_t = 1.0 / static_cast<double>(steps);
    for (std::size_t k = 0; k < net.width(); ++k) {
        const double* wk = net.weights().row(k);
        Vec v(net.dim());
        for (std::size_t j = 0; j < net.dim(); ++j) v[j] = wk[j] * inv_t;
        const double n = norm2(v);
        if (n > 0.0)
            for (auto& x : v) x /= n;
        out[k] = std::move(v);
    }
    return out;
}

HistogramResult direction_histogram(const std::vector<Vec>& directions,
                                    const theory::DirectionTable& table,
                                    double cos_threshold) {
    if (directions.empty())
        throw std::invalid_argument("direction_histogram: empty net");
    if (!(cos_threshold > 0.9 && cos_threshold < 1.0))
        throw std::invalid_argument("direction_histogram: threshold must be in (0.9,1)");
    HistogramResult res;
    res.counts.assign(table.entries.size(), 0);
    std::size_t unmatched = 0;
    for (const auto& d : directions) {
        double best = -2.0;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < table.entries.size(); ++i) {
            double c = 0.0;
            for (std::size_t j = 0; j < std::min(d.size(), std::size_t{2}); ++j)
                c += d[j] * table.entries[i].direction[j];
            if (c > best) {
                best = c;
                best_i = i;
            }
        }
        if (best >= cos_threshold)
            ++res.counts[best_i];
        else
            ++unmatched;
    }
    res.total = directions.size();
    res.empirical.resize(table.entries.size());
    for (std::size_t i = 0; i < res.counts.size(); ++i)
        res.empirical[i] = static_cast<double>(res.counts[i]) / res.total;
    res.unmatched = static_cast<double>(unmatched) / res.total;
    return res;
}

namespace {

struct GridField {
    std::function<double(double, double)> f;
    double lo, hi;
    int res;
    double step() const { return (hi - lo) / res; }
    double x(int i) const { return lo + i * step(); }
};

Vec bisect_edge(const GridField& g, Vec a, double fa, Vec b, double tol) {
    // signs differ (as >=0 / <0); shrink until |f| < tol at the midpoint
    for (int it = 0; it < 200; ++it) {
        Vec m{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
        const double fm = g.f(m[0], m[1]);
        if (std::fabs(fm) < tol) return m;
        if ((fm >= 0.0) == (fa >= 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
}

BoundaryTrace march(const GridField& g) {
    BoundaryTrace trace;
    trace.window_lo = g.lo;
    trace.window_hi = g.hi;
    trace.resolution = g.res;

    const int n = g.res;
    std::vector<double> vals((n + 1) * (n + 1));
    double scale = 0.0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            const double v = g.f(g.x(i), g.x(j));
            vals[i * (n + 1) + j] = v;
            scale = std::max(scale, std::fabs(v));
        }
    if (scale == 0.0) scale = 1.0;
    const double tol = 1e-9 * scale;
    trace.tolerance = tol;

    auto val = [&](int i, int j) { return vals[i * (n + 1) + j]; };
    auto pos = [&](int i, int j) { return Vec{g.x(i), g.x(j)}; };

    std::vector<std::pair<Vec, Vec>> segments;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            // cell corners: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1)
            const int ci[4] = {i, i + 1, i + 1, i};
            const int cj[4] = {j, j, j + 1, j + 1};
            std::vector<Vec> crossings;
            for (int e = 0; e < 4; ++e) {
                const int a = e, b = (e + 1) % 4;
                const double fa = val(ci[a], cj[a]), fb = val(ci[b], cj[b]);
                if ((fa >= 0.0) != (fb >= 0.0)) {
                    crossings.push_back(
                        bisect_edge(g, pos(ci[a], cj[a]), fa, pos(ci[b], cj[b]), tol));
                }
            }
            if (crossings.size() == 2) {
                segments.emplace_back(crossings[0], crossings[1]);
            } else if (crossings.size() == 4) {
                // saddle: pair by the center sign so the contour stays consistent
                const double fc = g.f(g.x(i) + 0.5 * g.step(), g.x(j) + 0.5 * g.step());
                const bool center_pos = fc >= 0.0;
                const bool corner0_pos = val(i, j) >= 0.0;
                if (center_pos == corner0_pos) {
                    segments.emplace_back(crossings[0], crossings[3]);
                    segments.emplace_back(crossings[1], crossings[2]);
                } else {
                    segments.emplace_back(crossings[0], crossings[1]);
                    segments.emplace_back(crossings[2], crossings[3]);
                }
            }
        }
    }
    if (segments.empty()) {
        trace.empty_flagged = true;
        return trace;
    }

    // Stitch segments sharing endpoints into polylines.
    const double snap = g.step() * 1e-6;
    auto key = [&](const Vec& p) {
        return std::make_pair(std::llround(p[0] / snap), std::llround(p[1] / snap));
    };
    std::map<std::pair<long long, long long>, std::vector<std::size_t>> by_end;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        by_end[key(segments[s].first)].push_back(s);
        by_end[key(segments[s].second)].push_back(s);
    }
    std::vector<bool> used(segments.size(), false);
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (used[s]) continue;
        used[s] = true;
        std::vector<Vec> line{segments[s].first, segments[s].second};
        // extend forward from the back, then backward from the front
        for (int dir = 0; dir < 2; ++dir) {
            for (;;) {
                const Vec& tip = dir == 0 ? line.back() : line.front();
                const auto it = by_end.find(key(tip));
                if (it == by_end.end()) break;
                std::size_t next = segments.size();
                for (std::size_t cand : it->second)
                    if (!used[cand]) {
                        next = cand;
                        break;
                    }
                if (next == segments.size()) break;
                used[next] = true;
                const bool first_matches = key(segments[next].first) == key(tip);
                const Vec& add = first_matches ? segments[next].second
                                               : segments[next].first;
                if (dir == 0)
                    line.push_back(add);
                else
                    line.insert(line.begin(), add);
            }
        }
        trace.polylines.push_back(std::move(line));
    }
    return trace;
}

}  // namespace

BoundaryTrace extract_boundary(const network::TwoLayerNet& net, double window_lo,
                               double window_hi, int resolution) {
    if (resolution < 64)
        throw std::invalid_argument("extract_boundary: resolution must be >= 64");
    if (net.dim() != 2)
        throw std::invalid_argument("extract_boundary: 2-D nets only");
    GridField g{[&net](double x, double y) {
                    return net.forward(Vec{x, y});
                },
                window_lo, window_hi, resolution};
    return march(g);
}

BoundaryTrace extract_boundary_field(const std::function<double(double, double)>& f,
                                     double window_lo, double window_hi,
                                     int resolution) {
    if (resolution < 64)
        throw std::invalid_argument("extract_boundary_field: resolution must be >= 64");
    GridField g{f, window_lo, window_hi, resolution};
    return march(g);
}

void boundary_to_svg(const BoundaryTrace& trace,
                     const std::vector<datasets::Sample>& scatter,
                     const std::optional<BoundaryTrace>& bayes_curve,
                     const std::string& path) {
    SvgPlot plot(trace.window_lo, trace.window_hi, trace.window_lo, trace.window_hi);
    for (const auto& s : scatter)
        plot.circle(s.x[0], s.x[1], 1.6, s.y > 0 ? "#d62728" : "#1f77b4", 0.45);
    if (bayes_curve)
        for (const auto& line : bayes_curve->polylines)
            plot.polyline(line, "#2ca02c", 2.0, "6,4");
    for (const auto& line : trace.polylines) plot.polyline(line, "black", 2.0);
    plot.write(path);
}

double linear_agreement(const network::TwoLayerNet& net,
                        const std::vector<Sample>& probe) {
    if (probe.empty()) throw std::invalid_argument("linear_agreement: empty probe set");
    std::vector<Vec> xs;
    std::vector<int> ys;
    xs.reserve(probe.size());
    ys.reserve(probe.size());
    for (const auto& s : probe) {
        xs.push_back(s.x);
        ys.push_back(net.forward(s.x) >= 0.0 ? 1 : -1);
    }
    bool all_same = true;
    for (int y : ys)
        if (y != ys[0]) all_same = false;
    if (all_same) return 1.0;  // a constant predictor is linear
    const LogregResult fit = fit_logistic(xs, ys);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (fit.predict(xs[i]) == ys[i]) ++agree;
    return static_cast<double>(agree) / xs.size();
}

double predictor_accuracy(const Predictor& pred, const GaussianSpec& spec,
                          std::size_t n, std::uint64_t seed) {
    if (n < 10000) throw std::invalid_argument("test_accuracy: n must be >= 1e4");
    const auto samples = datasets::sample_gaussian(spec, n, seed);
    std::size_t ok = 0;
    for (const auto& s : samples)
        if (pred(s.x) == s.y) ++ok;
    return static_cast<double>(ok) / n;
}

double test_accuracy(const network::TwoLayerNet& net, const GaussianSpec& spec,
                     std::size_t n, std::uint64_t seed) {
    return predictor_accuracy(
        [&net](const Vec& x) { return net.forward(x) >= 0.0 ? 1 : -1; }, spec, n,
        seed);
}

double accuracy_gap(const network::TwoLayerNet& a, const network::TwoLayerNet& b,
                    const GaussianSpec& spec, std::size_t n, std::uint64_t seed) {
    return paired_accuracy(a, b, spec, n, seed).gap;
}

PairedAccuracy paired_accuracy(const network::TwoLayerNet& a,
                               const network::TwoLayerNet& b,
                               const GaussianSpec& spec, std::size_t n,
                               std::uint64_t seed) {
    if (n < 10000) throw std::invalid_argument("accuracy_gap: n must be >= 1e4");
    const auto samples = datasets::sample_gaussian(spec, n, seed);
    long long ok_a = 0, ok_b = 0;
    for (const auto& s : samples) {
        ok_a += (a.forward(s.x) >= 0.0 ? 1 : -1) == s.y;
        ok_b += (b.forward(s.x) >= 0.0 ? 1 : -1) == s.y;
    }
    PairedAccuracy out;
    out.acc_a = static_cast<double>(ok_a) / n;
    out.acc_b = static_cast<double>(ok_b) / n;
    out.gap = static_cast<double>(ok_a - ok_b) / static_cast<double>(n);
    return out;
}

namespace {

std::vector<int> random_hypercube(RngStream& rng, int dim) {
    std::vector<int> x(dim);
    for (auto& v : x) v = rng.rademacher();
    return x;
}

Vec to_double(const std::vector<int>& x) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
    return out;
}

}  // namespace

DecodedCorrelation decoded_correlation(const network::MlpNet& net,
                                       const datasets::BooleanTaskSpec& task,
                                       DecodeTarget target, std::size_t n_retrain,
                                       std::size_t n_eval, std::uint64_t seed) {
    task.validate();
    auto target_value = [&](const std::vector<int>& x) {
        return target == DecodeTarget::core ? task.core_value(x)
                                            : task.spurious_value(x);
    };

    // Refit the last layer on fresh uniform samples labeled by the target.
    RngStream rng(derive_seed(seed, "decode-retrain"));
    std::vector<Vec> feats;
    std::vector<int> labels;
    feats.reserve(n_retrain);
    labels.reserve(n_retrain);
    for (std::size_t i = 0; i < n_retrain; ++i) {
        const auto x = random_hypercube(rng, task.dim);
        feats.push_back(net.penultimate_features(to_double(x)));
        labels.push_back(target_value(x));
    }
    const LogregResult fit = fit_logistic(feats, labels);

    // Evaluate the correlation on the target's own distribution.
    double sum = 0.0;
    if (target == DecodeTarget::core) {
        RngStream erng(derive_seed(seed, "decode-eval"));
        for (std::size_t i = 0; i < n_eval; ++i) {
            const auto x = random_hypercube(erng, task.dim);
            const int pred = fit.predict(net.penultimate_features(to_double(x)));
            sum += target_value(x) * pred;
        }
    } else {
        const auto test =
            datasets::sample_boolean(task, n_eval, derive_seed(seed, "decode-eval"));
        for (const auto& s : test) {
            const int pred = fit.predict(net.penultimate_features(to_double(s.x)));
            sum += target_value(s.x) * pred;
        }
    }
    DecodedCorrelation out;
    out.value = sum / static_cast<double>(n_eval);
    out.se = std::sqrt(std::max(0.0, 1.0 - out.value * out.value) /
                       static_cast<double>(n_eval));
    out.retrain_converged = fit.converged;
    return out;
}

Histogram margin_histogram(const network::TwoLayerNet& net,
                           const std::vector<Sample>& batch, int bins) {
    if (bins < 10) throw std::invalid_argument("margin_histogram: bins must be >= 10");
    const auto m = network::margins(net, batch);
    double lo = m[0], hi = m[0];
    for (double v : m) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b)
        h.edges[b] = lo + (hi - lo) * b / static_cast<double>(bins);
    h.counts.assign(bins, 0);
    for (double v : m) {
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[b];
    }
    h.total = m.size();
    return h;
}

ConvergenceReport angular_convergence(const optim::TrajectoryLog& log, double tol_rad) {
    ConvergenceReport rep;
    if (log.records.size() < 2 || log.records.front().angles.empty()) return rep;
    const long long final_step = log.records.back().step;
    const long long window_start = final_step - final_step / 10;
    const std::size_t m = log.records.back().angles.size();

    // Unwrapped drift per neuron over the window (a neuron sitting near the
    // +-pi seam would otherwise show a spurious 2 pi swing).
    std::vector<double> lo(m, 0.0), hi(m, 0.0), prev(m, 0.0), offset(m, 0.0);
    bool first = true;
    for (const auto& rec : log.records) {
        if (rec.step < window_start || rec.angles.empty()) continue;
        for (std::size_t k = 0; k < m; ++k) {
            double a = rec.angles[k];
            if (!first) {
                while (a + offset[k] - prev[k] > M_PI) offset[k] -= 2.0 * M_PI;
                while (a + offset[k] - prev[k] < -M_PI) offset[k] += 2.0 * M_PI;
            }
            const double u = a + offset[k];
            if (first) {
                lo[k] = hi[k] = u;
            } else {
                lo[k] = std::min(lo[k], u);
                hi[k] = std::max(hi[k], u);
            }
            prev[k] = u;
        }
        first = false;
    }
    for (std::size_t k = 0; k < m; ++k)
        rep.max_angular_drift = std::max(rep.max_angular_drift, hi[k] - lo[k]);
    rep.converged = rep.max_angular_drift < tol_rad;
    return rep;
}

}  // namespace iblab::analysis
