#include "mrfa/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace mrfa {

namespace {

// Exact rational with __int128 terms; the recursion below only ever divides
// by small integers, so reduced fractions stay far from overflow.
struct Fraction {
    __int128 num = 0;
    __int128 den = 1;

    static __int128 gcd(__int128 a, __int128 b) {
        if (a < 0) a = -a;
        if (b < 0) b = -b;
        while (b) {
            const __int128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    }
    void reduce() {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const __int128 g = gcd(num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }
    Fraction operator+(const Fraction& o) const {
        Fraction f{num * o.den + o.num * den, den * o.den};
        f.reduce();
        return f;
    }
    Fraction operator/(std::int64_t k) const {
        Fraction f{num, den * k};
        f.reduce();
        return f;
    }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// (I phi)(t) = integral_t^1 s * phi(s) ds, applied to a polynomial in t.
std::vector<Fraction> integrate_once(const std::vector<Fraction>& a) {
    std::vector<Fraction> b(a.size() + 2);
    for (size_t i = 0; i < a.size(); ++i) {
        const Fraction term = a[i] / static_cast<std::int64_t>(i + 2);
        b[0] = b[0] + term;
        b[i + 2].num = -term.num;
        b[i + 2].den = term.den;
    }
    return b;
}

std::vector<double> wendland_coefficients(int m, int k) {
    const int l = m / 2 + k + 1;
    // (1 - t)^l expanded with binomial coefficients.
    std::vector<Fraction> poly(static_cast<size_t>(l) + 1);
    __int128 binom = 1;
    for (int i = 0; i <= l; ++i) {
        poly[static_cast<size_t>(i)] = Fraction{(i % 2 == 0) ? binom : -binom, 1};
        binom = binom * (l - i) / (i + 1);
    }
    for (int j = 0; j < k; ++j) poly = integrate_once(poly);
    // Normalize so the value at 0 (the constant term) is exactly 1.
    std::vector<double> c(poly.size());
    const Fraction scale = poly[0];
    for (size_t i = 0; i < poly.size(); ++i) {
        Fraction f{poly[i].num * scale.den, poly[i].den * scale.num};
        f.reduce();
        c[i] = f.value();
    }
    c[0] = 1.0;
    return c;
}

}  // namespace

const WendlandKernel& WendlandKernel::get(int m, int k) {
    if (k < 0 || k > kMaxSmoothness)
        throw std::invalid_argument("wendland: smoothness k must be in [0, " +
                                    std::to_string(kMaxSmoothness) + "], got " + std::to_string(k));
    if (m < 1 || m > kMaxDim)
        throw std::invalid_argument("wendland: dimension m must be in [1, " +
                                    std::to_string(kMaxDim) + "], got " + std::to_string(m));
    static std::mutex mu;
    static std::map<std::pair<int, int>, WendlandKernel> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({m, k});
    if (it == cache.end()) {
        WendlandKernel kern;
        kern.smoothness_k = k;
        kern.effect_dim_m = m;
        kern.coeffs = wendland_coefficients(m, k);
        it = cache.emplace(std::make_pair(m, k), std::move(kern)).first;
    }
    return it->second;
}

double WendlandKernel::operator()(double radius) const {
    if (radius >= 1.0) return 0.0;
    double v = 0.0;
    for (size_t i = coeffs.size(); i-- > 0;) v = v * radius + coeffs[i];
    // Horner leaves O(1e-13) noise at the high-multiplicity root r = 1.
    return std::clamp(v, 0.0, 1.0);
}

double wendland_profile(double radius, int m, int k) {
    if (radius < 0.0) throw std::invalid_argument("wendland_profile: negative radius");
    return WendlandKernel::get(m, k)(radius);
}

ResolutionLevel BasisSchedule::level(int r, int r_max) const {
    if (r < 1 || r > r_max)
        throw std::out_of_range("level_schedule: resolution level " + std::to_string(r) +
                                " outside [1, " + std::to_string(r_max) + "]");
    ResolutionLevel lv;
    lv.level = r;
    const std::int64_t g = count_1d(r);
    lv.centers_1d.resize(static_cast<size_t>(g));
    for (std::int64_t i = 0; i < g; ++i)
        lv.centers_1d[static_cast<size_t>(i)] = static_cast<double>(i) / static_cast<double>(g - 1);
    lv.bandwidth = h0 * std::pow(decay, r - 1);
    return lv;
}

std::int64_t BasisSchedule::count_1d(int r) const {
    std::int64_t g = g0;
    for (int i = 1; i < r; ++i) g *= growth;
    return g;
}

std::int64_t BasisSchedule::atom_count(int dim, int r) const {
    const std::int64_t g = count_1d(r);
    std::int64_t n = 1;
    for (int i = 0; i < dim; ++i) {
        if (n > (std::int64_t{1} << 62) / g) return std::int64_t{1} << 62;  // saturate
        n *= g;
    }
    return n;
}

double BasisAtom::eval(std::span<const double> x) const {
    double ss = 0.0;
    for (size_t i = 0; i < center.size(); ++i) {
        const double t = x[static_cast<size_t>(owner.u[i])] - center[i];
        ss += t * t;
    }
    return (*kernel)(std::sqrt(ss) / bandwidth);
}

double BasisAtom::eval_restricted(std::span<const double> x_u) const {
    double ss = 0.0;
    for (size_t i = 0; i < center.size(); ++i) {
        const double t = x_u[i] - center[i];
        ss += t * t;
    }
    return (*kernel)(std::sqrt(ss) / bandwidth);
}

CapacityError::CapacityError(const EffectResolution& g, std::int64_t req, std::int64_t cap_)
    : std::runtime_error("atom cap exceeded for " + g.str() + ": " + std::to_string(req) +
                         " atoms requested, cap " + std::to_string(cap_)),
      group(g),
      requested(req),
      cap(cap_) {}

std::vector<BasisAtom> build_atoms(const EffectResolution& g, const BasisSchedule& schedule,
                                   int r_max, std::int64_t atom_cap) {
    const int m = g.order();
    const std::int64_t count = schedule.atom_count(m, g.r);
    if (count > atom_cap) throw CapacityError(g, count, atom_cap);

    const ResolutionLevel lv = schedule.level(g.r, r_max);
    const WendlandKernel& kern = WendlandKernel::get(m, schedule.kernel_k);
    const double bw = lv.bandwidth * std::sqrt(static_cast<double>(m));
    const std::int64_t g1 = static_cast<std::int64_t>(lv.centers_1d.size());

    std::vector<BasisAtom> atoms;
    atoms.reserve(static_cast<size_t>(count));
    std::vector<std::int64_t> idx(static_cast<size_t>(m), 0);
    for (std::int64_t a = 0; a < count; ++a) {
        BasisAtom atom;
        atom.owner = g;
        atom.bandwidth = bw;
        atom.kernel = &kern;
        atom.center.resize(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i)
            atom.center[static_cast<size_t>(i)] = lv.centers_1d[static_cast<size_t>(idx[static_cast<size_t>(i)])];
        atoms.push_back(std::move(atom));
        // lexicographic increment, last coordinate fastest
        for (int i = m - 1; i >= 0; --i) {
            if (++idx[static_cast<size_t>(i)] < g1) break;
            idx[static_cast<size_t>(i)] = 0;
        }
    }
    return atoms;
}

double SparseColumn::dot(const Eigen::VectorXd& v) const {
    double s = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) s += vals[i] * v[rows[i]];
    return s;
}

void SparseColumn::axpy(double a, Eigen::VectorXd& v) const {
    for (size_t i = 0; i < rows.size(); ++i) v[rows[i]] += a * vals[i];
}

double SparseColumn::squared_norm() const {
    double s = 0.0;
    for (const double v : vals) s += v * v;
    return s;
}

std::vector<SparseColumn> design_columns(const std::vector<BasisAtom>& atoms,
                                         const Eigen::MatrixXd& X) {
    constexpr double kStructuralZero = 1e-12;
    const int n = static_cast<int>(X.rows());
    for (const auto& atom : atoms)
        if (!atom.owner.u.empty() && atom.owner.u.back() >= X.cols())
            throw std::invalid_argument("design_columns: input matrix has " +
                                        std::to_string(X.cols()) + " columns but atom needs index " +
                                        std::to_string(atom.owner.u.back() + 1));
    std::vector<SparseColumn> cols(atoms.size());
    std::vector<double> xrow(static_cast<size_t>(X.cols()));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < X.cols(); ++j) xrow[static_cast<size_t>(j)] = X(i, j);
        for (size_t a = 0; a < atoms.size(); ++a) {
            const double v = atoms[a].eval(xrow);
            if (v > kStructuralZero) {
                cols[a].rows.push_back(i);
                cols[a].vals.push_back(v);
            }
        }
    }
    return cols;
}

}  // namespace mrfa
