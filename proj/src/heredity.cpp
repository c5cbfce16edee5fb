#include "mrfa/heredity.hpp"

#include <algorithm>
#include <stdexcept>

namespace mrfa {

EffectResolution::EffectResolution(std::vector<int> u_, int r_) : u(std::move(u_)), r(r_) {
    std::sort(u.begin(), u.end());
    if (u.empty()) throw std::invalid_argument("EffectResolution: empty effect set");
    if (std::adjacent_find(u.begin(), u.end()) != u.end())
        throw std::invalid_argument("EffectResolution: duplicate index in effect set");
    if (u.front() < 0) throw std::invalid_argument("EffectResolution: negative input index");
    if (r < 1) throw std::invalid_argument("EffectResolution: resolution level must be >= 1");
}

bool EffectResolution::valid(int d, int d_max, int r_max) const {
    if (u.empty() || order() > d_max || r < 1 || r > r_max) return false;
    return u.back() < d;
}

std::string EffectResolution::str() const {
    std::string s = "({";
    for (size_t i = 0; i < u.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(u[i] + 1);
    }
    s += "}," + std::to_string(r) + ")";
    return s;
}

std::vector<EffectResolution> parents(const EffectResolution& g) {
    std::vector<EffectResolution> out;
    if (g.r > 1) out.emplace_back(g.u, g.r - 1);
    if (g.order() > 1) {
        for (size_t i = 0; i < g.u.size(); ++i) {
            std::vector<int> v = g.u;
            v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
            out.emplace_back(std::move(v), g.r);
        }
    }
    return out;
}

std::vector<EffectResolution> children(const EffectResolution& g, const LatticeBounds& bounds) {
    std::vector<EffectResolution> out;
    if (g.r < bounds.r_max) out.emplace_back(g.u, g.r + 1);
    if (g.order() < bounds.d_max) {
        for (int j = 0; j < bounds.d; ++j) {
            if (std::binary_search(g.u.begin(), g.u.end(), j)) continue;
            std::vector<int> v = g.u;
            v.push_back(j);
            out.emplace_back(std::move(v), g.r);
        }
    }
    return out;
}

bool is_heredity_closed(const EffectSet& s) {
    for (const auto& g : s)
        for (const auto& p : parents(g))
            if (!s.count(p)) return false;
    return true;
}

EffectSet expand_candidates(const EffectSet& active, const EffectSet& candidates,
                            const LatticeBounds& bounds) {
    EffectSet out = candidates;
    for (const auto& g : active) {
        for (const auto& c : children(g, bounds)) {
            if (out.count(c)) continue;
            const auto ps = parents(c);
            const bool eligible = std::all_of(ps.begin(), ps.end(),
                                              [&](const EffectResolution& p) { return active.count(p) > 0; });
            if (eligible) out.insert(c);
        }
    }
    return out;
}

namespace {

// Enumerate all nonempty subsets of g.u paired with every s <= g.r.
template <class Fn>
void for_each_member(const EffectResolution& g, Fn&& fn) {
    const int m = g.order();
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        std::vector<int> v;
        for (int i = 0; i < m; ++i)
            if (mask & (1u << i)) v.push_back(g.u[static_cast<size_t>(i)]);
        for (int s = 1; s <= g.r; ++s) fn(EffectResolution(v, s));
    }
}

}  // namespace

EffectSet heredity_closure(const EffectSet& s) {
    EffectSet out;
    for (const auto& g : s)
        for_each_member(g, [&](const EffectResolution& m) { out.insert(m); });
    return out;
}

void GroupStructure::register_atom_count(const EffectResolution& g, std::int64_t count) {
    if (count < 0) throw std::invalid_argument("GroupStructure: negative atom count");
    atom_counts_[g] = count;
}

bool GroupStructure::has_atom_count(const EffectResolution& g) const {
    return atom_counts_.count(g) > 0;
}

std::int64_t GroupStructure::atom_count(const EffectResolution& g) const {
    const auto it = atom_counts_.find(g);
    if (it == atom_counts_.end())
        throw std::out_of_range("GroupStructure: no atom count registered for " + g.str());
    return it->second;
}

std::int64_t GroupStructure::group_weight(const EffectResolution& g) const {
    std::int64_t total = 0;
    for_each_member(g, [&](const EffectResolution& m) { total += atom_count(m); });
    return total;
}

std::vector<EffectResolution> GroupStructure::member_effects(const EffectResolution& g) const {
    std::vector<EffectResolution> out;
    for_each_member(g, [&](const EffectResolution& m) { out.push_back(m); });
    std::sort(out.begin(), out.end());
    return out;
}

void GroupStructure::add_candidate(const EffectResolution& g) {
    for (const auto& p : parents(g))
        if (!candidates_.count(p))
            throw std::logic_error("GroupStructure: adding " + g.str() +
                                   " would break heredity closure (missing " + p.str() + ")");
    candidates_.insert(g);
}

void GroupStructure::set_active(EffectSet a) {
    for (const auto& g : a)
        if (!candidates_.count(g))
            throw std::logic_error("GroupStructure: active group " + g.str() + " is not a candidate");
    active_ = std::move(a);
}

int GroupStructure::replicate_count(const EffectResolution& owner) const {
    int n = 0;
    for (const auto& c : candidates_) {
        if (c.r < owner.r) continue;
        if (std::includes(c.u.begin(), c.u.end(), owner.u.begin(), owner.u.end())) ++n;
    }
    return n;
}

}  // namespace mrfa
