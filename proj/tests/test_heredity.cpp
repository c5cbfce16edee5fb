#include <doctest.h>

#include <algorithm>

#include "mrfa/heredity.hpp"
#include "mrfa/kernels.hpp"
#include "mrfa/rng.hpp"

using namespace mrfa;

namespace {

EffectSet make_set(std::initializer_list<EffectResolution> items) { return EffectSet(items); }

std::vector<EffectResolution> full_lattice(const LatticeBounds& b) {
    std::vector<EffectResolution> out;
    const unsigned top = 1u << b.d;
    for (unsigned mask = 1; mask < top; ++mask) {
        std::vector<int> u;
        for (int i = 0; i < b.d; ++i)
            if (mask & (1u << i)) u.push_back(i);
        if (static_cast<int>(u.size()) > b.d_max) continue;
        for (int r = 1; r <= b.r_max; ++r) out.emplace_back(u, r);
    }
    return out;
}

}  // namespace

TEST_CASE("parents: definition") {
    const auto p1 = parents(EffectResolution({0, 1}, 1));
    CHECK(EffectSet(p1.begin(), p1.end()) ==
          make_set({EffectResolution({0}, 1), EffectResolution({1}, 1)}));

    CHECK(parents(EffectResolution({0}, 1)).empty());

    const auto p2 = parents(EffectResolution({0, 1}, 2));
    CHECK(EffectSet(p2.begin(), p2.end()) ==
          make_set({EffectResolution({0, 1}, 1), EffectResolution({0}, 2),
                    EffectResolution({1}, 2)}));
}

TEST_CASE("children: enumeration and bounds") {
    const LatticeBounds b{2, 2, 2};
    const auto c1 = children(EffectResolution({0}, 1), b);
    CHECK(EffectSet(c1.begin(), c1.end()) ==
          make_set({EffectResolution({0}, 2), EffectResolution({0, 1}, 1)}));

    const LatticeBounds b1{1, 2, 2};
    CHECK(children(EffectResolution({0}, 2), b1).empty());
}

TEST_CASE("parents/children duality on a d=3 lattice") {
    const LatticeBounds b{3, 3, 3};
    const auto lattice = full_lattice(b);
    for (const auto& g : lattice) {
        for (const auto& c : children(g, b)) {
            const auto ps = parents(c);
            CHECK(std::count(ps.begin(), ps.end(), g) == 1);
        }
        for (const auto& p : parents(g)) {
            const auto cs = children(p, b);
            CHECK(std::count(cs.begin(), cs.end(), g) == 1);
        }
    }
}

TEST_CASE("expand_candidates applies the all-parents-active rule") {
    const LatticeBounds b{2, 10, 10};
    EffectSet candidates = make_set({EffectResolution({0}, 1), EffectResolution({1}, 1)});

    SUBCASE("single active main effect") {
        const EffectSet active = make_set({EffectResolution({0}, 1)});
        const EffectSet out = expand_candidates(active, candidates, b);
        CHECK(out.count(EffectResolution({0}, 2)) == 1);
        CHECK(out.count(EffectResolution({0, 1}, 1)) == 0);
        CHECK(out.size() == candidates.size() + 1);
    }
    SUBCASE("both main effects active") {
        const EffectSet active = make_set({EffectResolution({0}, 1), EffectResolution({1}, 1)});
        const EffectSet out = expand_candidates(active, candidates, b);
        CHECK(out.count(EffectResolution({0}, 2)) == 1);
        CHECK(out.count(EffectResolution({1}, 2)) == 1);
        CHECK(out.count(EffectResolution({0, 1}, 1)) == 1);
        CHECK(out.size() == candidates.size() + 3);
        CHECK(is_heredity_closed(out));
        CHECK(expand_candidates(active, out, b) == out);  // idempotent
    }
    SUBCASE("no active groups") {
        CHECK(expand_candidates({}, candidates, b) == candidates);
    }
}

TEST_CASE("is_heredity_closed matches a brute-force oracle on random subsets") {
    const LatticeBounds b{4, 4, 2};
    const auto lattice = full_lattice(b);
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        EffectSet s;
        for (const auto& g : lattice)
            if (rng.uniform() < 0.25) s.insert(g);
        bool expect = true;
        for (const auto& g : s) {
            // brute force over every lattice element that should be present
            for (const auto& h : lattice) {
                const bool is_ancestor =
                    h.r <= g.r &&
                    std::includes(g.u.begin(), g.u.end(), h.u.begin(), h.u.end()) &&
                    !(h == g);
                // strong heredity needs only parents transitively, i.e. all
                // (v,s) with v subset u, s <= r
                if (is_ancestor && !s.count(h)) expect = false;
            }
        }
        CHECK(is_heredity_closed(s) == expect);
    }
    CHECK(is_heredity_closed(make_set({EffectResolution({0}, 1)})));
    CHECK_FALSE(is_heredity_closed(make_set({EffectResolution({0, 1}, 1)})));
}

TEST_CASE("heredity_closure contains exactly the ancestor set") {
    const EffectSet s = make_set({EffectResolution({0, 2}, 2)});
    const EffectSet closure = heredity_closure(s);
    CHECK(closure == make_set({EffectResolution({0}, 1), EffectResolution({0}, 2),
                               EffectResolution({2}, 1), EffectResolution({2}, 2),
                               EffectResolution({0, 2}, 1), EffectResolution({0, 2}, 2)}));
    CHECK(is_heredity_closed(closure));
}

TEST_CASE("group weights are the exact member atom-count sums") {
    GroupStructure gs(LatticeBounds{3, 3, 3});
    const BasisSchedule sched;
    for (int r = 1; r <= 3; ++r) {
        gs.register_atom_count(EffectResolution({0}, r), sched.atom_count(1, r));
        gs.register_atom_count(EffectResolution({1}, r), sched.atom_count(1, r));
        gs.register_atom_count(EffectResolution({0, 1}, r), sched.atom_count(2, r));
    }
    CHECK(gs.group_weight(EffectResolution({0}, 1)) == 5);
    CHECK(gs.group_weight(EffectResolution({0}, 2)) == 15);
    CHECK(gs.group_weight(EffectResolution({0, 1}, 1)) == 5 + 5 + 25);
    CHECK(gs.group_weight(EffectResolution({0, 1}, 2)) == 15 + 15 + (25 + 100));
    CHECK_THROWS_AS(gs.group_weight(EffectResolution({0, 2}, 1)), std::out_of_range);

    // strictly increasing in r and under set inclusion
    CHECK(gs.group_weight(EffectResolution({0}, 2)) > gs.group_weight(EffectResolution({0}, 1)));
    CHECK(gs.group_weight(EffectResolution({0, 1}, 1)) >
          gs.group_weight(EffectResolution({0}, 1)));
}

TEST_CASE("replicate counts match brute force over candidate lattices") {
    const LatticeBounds b{3, 3, 3};
    GroupStructure gs(b);
    const auto lattice = full_lattice(b);
    for (const auto& g : lattice) gs.register_atom_count(g, 1);
    // candidates: full closure of everything (entire lattice, added in
    // canonical order so parents precede children)
    std::vector<EffectResolution> sorted = lattice;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& g : sorted) gs.add_candidate(g);

    for (const auto& owner : sorted) {
        int expect = 0;
        for (const auto& c : sorted) {
            if (c.r >= owner.r &&
                std::includes(c.u.begin(), c.u.end(), owner.u.begin(), owner.u.end()))
                ++expect;
        }
        CHECK(gs.replicate_count(owner) == expect);
    }
}

TEST_CASE("GroupStructure enforces closure and candidate/active consistency") {
    GroupStructure gs(LatticeBounds{2, 2, 2});
    gs.register_atom_count(EffectResolution({0}, 1), 5);
    gs.register_atom_count(EffectResolution({0}, 2), 10);
    gs.add_candidate(EffectResolution({0}, 1));
    CHECK_THROWS_AS(gs.add_candidate(EffectResolution({0, 1}, 1)), std::logic_error);
    gs.add_candidate(EffectResolution({0}, 2));
    CHECK_THROWS_AS(gs.set_active(make_set({EffectResolution({1}, 1)})), std::logic_error);
    gs.set_active(make_set({EffectResolution({0}, 1)}));
    CHECK(gs.active().size() == 1);
}
