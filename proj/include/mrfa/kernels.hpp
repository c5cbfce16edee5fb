#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "mrfa/heredity.hpp"

namespace mrfa {

/// Compactly supported Wendland radial profile for effect dimension m and
/// smoothness parameter k, normalized so the value at radius 0 is 1 and the
/// value is exactly 0 for radius >= 1. The polynomial part is built once by
/// the integral recursion applied to (1-t)^l with l = floor(m/2)+k+1.
struct WendlandKernel {
    int smoothness_k = 2;
    int effect_dim_m = 1;
    std::vector<double> coeffs;  // radial polynomial on [0,1], coeffs[i] * t^i

    static constexpr int kMaxSmoothness = 4;
    static constexpr int kMaxDim = 20;

    static const WendlandKernel& get(int m, int k);  // cached, thread-safe

    double operator()(double radius) const;
};

/// wendland_profile(0, m, k) == 1; 0 beyond the unit radius.
double wendland_profile(double radius, int m, int k);

/// Level-r set of one-dimensional centers (endpoints included, evenly
/// spaced) and the shared bandwidth.
struct ResolutionLevel {
    int level = 1;
    std::vector<double> centers_1d;
    double bandwidth = 0.75;
};

/// Geometric center/width schedule: g(r) = g0 * growth^(r-1) centers with
/// bandwidth h(r) = h0 * decay^(r-1).
struct BasisSchedule {
    int g0 = 5;
    int growth = 2;
    double h0 = 0.75;
    double decay = 2.0 / 3.0;
    int kernel_k = 2;

    ResolutionLevel level(int r, int r_max) const;
    std::int64_t count_1d(int r) const;                  // g(r)
    std::int64_t atom_count(int dim, int r) const;       // g(r)^dim, saturating
};

/// One basis function: a Wendland bump at `center` over the coordinates of
/// the owning effect set, with the stated bandwidth.
struct BasisAtom {
    EffectResolution owner;
    std::vector<double> center;  // length |u|, entries in [0,1]
    double bandwidth = 0.75;
    const WendlandKernel* kernel = nullptr;

    /// Evaluate at x (full d-vector, scaled to [0,1]^d).
    double eval(std::span<const double> x) const;
    /// Evaluate on the restricted coordinates x_u directly.
    double eval_restricted(std::span<const double> x_u) const;
};

/// Raised when a requested (u, r) grid would exceed the atom cap.
struct CapacityError : std::runtime_error {
    EffectResolution group;
    std::int64_t requested = 0;
    std::int64_t cap = 0;
    CapacityError(const EffectResolution& g, std::int64_t req, std::int64_t cap_);
};

/// Full factorial grid of level-r one-dimensional centers over the
/// coordinates of u, bandwidth h(r)*sqrt(|u|), lexicographic center order.
std::vector<BasisAtom> build_atoms(const EffectResolution& g, const BasisSchedule& schedule,
                                   int r_max, std::int64_t atom_cap);

/// One design-matrix column stored sparsely (row indices + values).
struct SparseColumn {
    std::vector<int> rows;
    std::vector<double> vals;

    bool empty() const { return rows.empty(); }
    double dot(const Eigen::VectorXd& v) const;
    void axpy(double a, Eigen::VectorXd& v) const;  // v += a * column
    double squared_norm() const;
};

/// Evaluate the atoms at every row of X (n x d, scaled to [0,1]^d); entries
/// below 1e-12 are stored as structural zeros. Column order matches atom
/// order; output is reproducible bit-for-bit.
std::vector<SparseColumn> design_columns(const std::vector<BasisAtom>& atoms,
                                         const Eigen::MatrixXd& X);

}  // namespace mrfa
