#include "iblab/datasets.hpp"

#include <cmath>
#include <stdexcept>

#include "iblab/csv.hpp"
#include "iblab/special.hpp"

namespace iblab::datasets {

std::pair<double, double> realizable_means(double mu, double omega, double kappa) {
    if (!(mu > 0.0)) throw std::invalid_argument("realizable_means: mu must be > 0");
    if (!(omega >= 1.0))
        throw std::invalid_argument("realizable_means: omega must be >= 1");
    if (!(kappa > 0.0))
        throw std::invalid_argument("realizable_means: kappa must be > 0");
    const double mu1 = 0.5 * mu * (kappa * omega - 1.0 / omega);
    const double mu3 = 0.5 * mu * (kappa * omega + 1.0 / omega);
    return {mu1, mu3};
}

void GaussianSpec::finalize() {
    if (dim < 2) throw std::invalid_argument("GaussianSpec: dim must be >= 2");
    if (sigma_x < 0.0 || sigma_y < 0.0 || sigma_z < 0.0)
        throw std::invalid_argument("GaussianSpec: negative stddev");
    // kappa is defined as sigma_x^2 / sigma_y^2; an inconsistent pair would
    // silently break realizability, so reject it outright
    if (sigma_y > 0.0) {
        const double ratio = (sigma_x * sigma_x) / (sigma_y * sigma_y);
        if (std::fabs(ratio - kappa) > 1e-9 * std::max(1.0, kappa))
            throw std::invalid_argument(
                "GaussianSpec: kappa must equal sigma_x^2 / sigma_y^2");
    }
    auto [m1, m3] = realizable_means(mu, omega, kappa);
    mu1 = m1;
    mu3 = m3;
}

double GaussianSpec::lambda() const {
    if (sigma_x != sigma_y)
        throw std::logic_error("GaussianSpec::lambda needs sigma_x == sigma_y");
    return (mu / sigma_x) * (omega * omega + 1.0) / (2.0 * omega);
}

Vec GaussianSpec::unit_mean_pos() const {
    Vec v(dim, 0.0);
    const double w2 = omega * omega;
    v[0] = (w2 - 1.0) / (w2 + 1.0);
    v[1] = 2.0 * omega / (w2 + 1.0);
    return v;
}

Vec GaussianSpec::unit_mean_neg() const {
    Vec v = unit_mean_pos();
    v[1] = -v[1];
    return v;
}

Vec GaussianSpec::unit_mean_zero() const {
    Vec v(dim, 0.0);
    v[0] = -1.0;
    return v;
}

std::vector<Sample> sample_gaussian(const GaussianSpec& spec, std::size_t n,
                                    std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_gaussian: n must be >= 1");
    RngStream rng(seed);
    std::vector<Sample> out(n);
    for (auto& s : out) {
        s.y = rng.rademacher();
        s.epsilon = rng.rademacher();
        s.x.resize(spec.dim);
        const double mean1 =
            0.5 * (spec.mu1 - spec.mu3) + s.y * 0.5 * (spec.mu1 + spec.mu3);
        const double mean2 = s.epsilon * 0.5 * (s.y + 1) * spec.mu;
        s.x[0] = rng.normal(mean1, spec.sigma_x);
        s.x[1] = rng.normal(mean2, spec.sigma_y);
        for (int j = 2; j < spec.dim; ++j) s.x[j] = rng.normal(0.0, spec.sigma_z);
    }
    return out;
}

double bayes_decision_value(const GaussianSpec& spec, double x1, double x2) {
    if (!(spec.sigma_y > 0.0))
        throw std::invalid_argument("bayes_decision_value: sigma_y must be > 0");
    // Realizable reduced boundary, general kappa:
    //   omega x1 + |x2| + (sigma_y^2/mu) log(0.5 (1 + exp(-2 mu |x2| / sigma_y^2)))
    // The |x2| form is the algebraic identity that makes the x2-evenness exact
    // and keeps the exp argument nonpositive.
    const double sy2 = spec.sigma_y * spec.sigma_y;
    const double a2 = std::fabs(x2);
    const double u = 2.0 * spec.mu * a2 / sy2;  // >= 0
    const double logterm = softplus(-u) - kLn2;  // log(0.5 (1 + exp(-u)))
    return spec.omega * x1 + a2 + (sy2 / spec.mu) * logterm;
}

int bayes_label(const GaussianSpec& spec, const Vec& x) {
    if (x.size() < 2) throw std::invalid_argument("bayes_label: need >= 2 coords");
    return bayes_decision_value(spec, x[0], x[1]) >= 0.0 ? 1 : -1;
}

Vec ToySpec::z1() const { return {-0.5 * mu * (omega + 1.0 / omega), 0.0}; }
Vec ToySpec::z2() const { return {0.5 * mu * (omega - 1.0 / omega), mu}; }
Vec ToySpec::z3() const { return {0.5 * mu * (omega - 1.0 / omega), -mu}; }

bool ToySpec::omega_in_theorem_window() const {
    const double w2 = omega * omega;
    return w2 > 1.0 + 2.0 / std::sqrt(3.0) && w2 < 3.0 + 2.0 * std::sqrt(2.0);
}

std::vector<Sample> sample_toy(const ToySpec& spec, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_toy: n must be >= 1");
    RngStream rng(seed);
    std::vector<Sample> out(n);
    const Vec p1 = spec.z1(), p2 = spec.z2(), p3 = spec.z3();
    for (auto& s : out) {
        s.y = rng.rademacher();
        s.epsilon = rng.rademacher();
        if (s.y < 0) {
            s.x = p1;
        } else {
            s.x = s.epsilon > 0 ? p2 : p3;
        }
    }
    return out;
}

double toy_bayes_decision_value(const ToySpec& spec, double x1, double x2) {
    return spec.omega * x1 + std::fabs(x2);
}

int toy_bayes_label(const ToySpec& spec, const Vec& x) {
    if (x.size() < 2) throw std::invalid_argument("toy_bayes_label: need >= 2 coords");
    return toy_bayes_decision_value(spec, x[0], x[1]) >= 0.0 ? 1 : -1;
}

int staircase(const std::vector<int>& x, int degree) {
    if (degree < 1) throw std::invalid_argument("staircase: degree must be >= 1");
    if (static_cast<std::size_t>(degree) > x.size())
        throw std::invalid_argument("staircase: degree exceeds input length");
    long long sum = 0;
    long long prod = 1;
    for (int i = 0; i < degree; ++i) {
        prod *= x[i];
        sum += prod;
    }
    return sum >= 0 ? 1 : -1;
}

void BooleanTaskSpec::validate() const {
    if (d_core < 1 || d_spurious < 0 || d_core + d_spurious > dim)
        throw std::invalid_argument("BooleanTaskSpec: bad coordinate partition");
    if (lambda_corr < 0.0 || lambda_corr > 1.0)
        throw std::invalid_argument("BooleanTaskSpec: lambda must be in [0,1]");
}

int BooleanTaskSpec::core_value(const std::vector<int>& x) const {
    std::vector<int> sub(x.begin(), x.begin() + d_core);
    return staircase(sub, d_core);
}

int BooleanTaskSpec::spurious_value(const std::vector<int>& x) const {
    std::vector<int> sub(x.begin() + d_core, x.begin() + d_core + d_spurious);
    return staircase(sub, d_spurious);
}

std::vector<BooleanSample> sample_boolean(const BooleanTaskSpec& spec, std::size_t n,
                                          std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_boolean: n must be >= 1");
    spec.validate();
    RngStream rng(seed);
    std::vector<BooleanSample> out(n);
    for (auto& s : out) {
        const bool want_same = rng.bernoulli(spec.lambda_corr);
        long rejections = 0;
        for (;;) {
            s.x.resize(spec.dim);
            for (int j = 0; j < spec.dim; ++j) s.x[j] = rng.rademacher();
            const int fc = spec.core_value(s.x);
            const int fs = spec.spurious_value(s.x);
            if ((fc == fs) == want_same) {
                s.y = fc;
                break;
            }
            if (++rejections >= 1000000)
                throw std::runtime_error("sample_boolean: rejection cap hit");
        }
    }
    return out;
}

void dump_samples_csv(const std::vector<Sample>& samples, int dim,
                      const std::string& path) {
    CsvWriter csv(path);
    std::vector<std::string> names;
    for (int j = 1; j <= dim; ++j) names.push_back("x" + std::to_string(j));
    names.push_back("y");
    names.push_back("eps");
    csv.header(names);
    for (const auto& s : samples) {
        for (int j = 0; j < dim; ++j) csv.field(s.x[j]);
        csv.field(s.y);
        csv.field(s.epsilon);
        csv.endrow();
    }
}

void dump_boolean_csv(const std::vector<BooleanSample>& samples, int dim,
                      const std::string& path) {
    CsvWriter csv(path);
    std::vector<std::string> names;
    for (int j = 1; j <= dim; ++j) names.push_back("b" + std::to_string(j));
    names.push_back("y");
    csv.header(names);
    for (const auto& s : samples) {
        for (int j = 0; j < dim; ++j) csv.field(s.x[j]);
        csv.field(s.y);
        csv.endrow();
    }
}

}  // namespace iblab::datasets
