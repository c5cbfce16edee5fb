#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mrfa {

/// One (u, r) pair: an effect set u (sorted, 0-based input indices) and a
/// resolution level r >= 1. This is the unit of grouping and heredity.
struct EffectResolution {
    std::vector<int> u;
    int r = 1;

    EffectResolution() = default;
    EffectResolution(std::vector<int> u_, int r_);

    int order() const { return static_cast<int>(u.size()); }
    bool valid(int d, int d_max, int r_max) const;
    std::string str() const;  // e.g. "({2,3},1)" with 1-based indices

    // Canonical total order: (|u|, u lexicographic, r).
    friend std::strong_ordering operator<=>(const EffectResolution& a, const EffectResolution& b) {
        if (a.u.size() != b.u.size()) return a.u.size() <=> b.u.size();
        if (auto c = a.u <=> b.u; c != 0) return c;
        return a.r <=> b.r;
    }
    friend bool operator==(const EffectResolution& a, const EffectResolution& b) {
        return a.u == b.u && a.r == b.r;
    }
};

using EffectSet = std::set<EffectResolution>;

struct LatticeBounds {
    int d = 0;       // number of inputs
    int d_max = 10;  // maximal interaction order
    int r_max = 10;  // maximal resolution level
};

/// Groups that must be active before g may enter the model:
/// (u, r-1) when r > 1, and (u \ {j}, r) for each j when |u| > 1.
std::vector<EffectResolution> parents(const EffectResolution& g);

/// Exact inverse of parents within the lattice bounds.
std::vector<EffectResolution> children(const EffectResolution& g, const LatticeBounds& bounds);

/// True iff every member's parents are all contained in s.
bool is_heredity_closed(const EffectSet& s);

/// Adds every group outside `candidates` whose parents are all active.
/// Preserves heredity closure, never removes, idempotent for a fixed
/// active set.
EffectSet expand_candidates(const EffectSet& active, const EffectSet& candidates,
                            const LatticeBounds& bounds);

/// Ancestor closure: all (v, s) with v subset of u, s <= r, for every g in s.
EffectSet heredity_closure(const EffectSet& s);

/// Candidate/active bookkeeping for the path solver: per-group atom counts
/// n_u(r), penalty weights N_u(r), member column ranges, replicate counts.
class GroupStructure {
public:
    explicit GroupStructure(LatticeBounds bounds) : bounds_(bounds) {}

    const LatticeBounds& bounds() const { return bounds_; }

    /// Registers the atom count of one (u, r); required before the group or
    /// any descendant can be added as a candidate.
    void register_atom_count(const EffectResolution& g, std::int64_t count);
    bool has_atom_count(const EffectResolution& g) const;
    std::int64_t atom_count(const EffectResolution& g) const;

    /// N_u(r) = sum of n_v(s) over v subset of u, s <= r. Throws if any
    /// member count is unregistered.
    std::int64_t group_weight(const EffectResolution& g) const;

    /// All (v, s) with v subset of u (nonempty), s <= r, in canonical order.
    std::vector<EffectResolution> member_effects(const EffectResolution& g) const;

    void add_candidate(const EffectResolution& g);
    bool is_candidate(const EffectResolution& g) const { return candidates_.count(g) > 0; }
    const EffectSet& candidates() const { return candidates_; }

    void set_active(EffectSet a);
    const EffectSet& active() const { return active_; }

    /// Number of candidate groups containing a coefficient of (v, s):
    /// the candidates (u, r) with v subset of u, s <= r.
    int replicate_count(const EffectResolution& owner) const;

private:
    LatticeBounds bounds_;
    EffectSet candidates_;
    EffectSet active_;
    std::map<EffectResolution, std::int64_t> atom_counts_;
};

}  // namespace mrfa
