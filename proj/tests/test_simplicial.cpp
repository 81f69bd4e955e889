#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "stmod/simplicial.hpp"
#include "test_util.hpp"

using namespace stmod;
using stmod::testutil::rng;

namespace {

// minimal circle: level n holds the n nonconstant monotone maps [n] -> [1],
// encoded by the number j in 1..n of leading zeros; both constants are the basepoint
PointedSSetLevels circle() {
    PointedSSetLevels x;
    x.arity = 1;
    x.level = [](const std::vector<int>& p) {
        std::vector<std::string> out;
        for (int j = 1; j <= p[0]; ++j) out.push_back("c" + std::to_string(j));
        return out;
    };
    x.face = [](const std::vector<int>& p, long e, int, int i) -> long {
        long j = e + 1;
        long nj = i < j ? j - 1 : j;
        if (nj == 0 || nj == p[0]) return -1;
        return nj - 1;
    };
    x.degeneracy = [](const std::vector<int>&, long e, int, int i) -> long {
        long j = e + 1;
        return (i < j ? j + 1 : j) - 1;
    };
    return x;
}

// levelwise smash of two 1-fold objects: pairs with either side at the basepoint collapse
PointedSSetLevels smash(PointedSSetLevels a, PointedSSetLevels b) {
    auto xs = std::make_shared<PointedSSetLevels>(std::move(a));
    auto ys = std::make_shared<PointedSSetLevels>(std::move(b));
    PointedSSetLevels z;
    z.arity = 1;
    z.level = [xs, ys](const std::vector<int>& p) {
        auto la = xs->level(p);
        auto lb = ys->level(p);
        std::vector<std::string> out;
        for (const auto& u : la)
            for (const auto& v : lb) out.push_back(u + "&" + v);
        return out;
    };
    z.face = [xs, ys](const std::vector<int>& p, long e, int, int i) -> long {
        long nb = long(ys->level(p).size());
        long fa = xs->face(p, e / nb, 0, i);
        if (fa < 0) return -1;
        long fb = ys->face(p, e % nb, 0, i);
        if (fb < 0) return -1;
        return fa * long(ys->level({p[0] - 1}).size()) + fb;
    };
    z.degeneracy = [xs, ys](const std::vector<int>& p, long e, int, int i) -> long {
        long nb = long(ys->level(p).size());
        long fa = xs->degeneracy(p, e / nb, 0, i);
        long fb = ys->degeneracy(p, e % nb, 0, i);
        return fa * long(ys->level({p[0] + 1}).size()) + fb;
    };
    return z;
}

// external product: directions of a then directions of b, levels are pairs
PointedSSetLevels external(PointedSSetLevels a, PointedSSetLevels b) {
    auto xs = std::make_shared<PointedSSetLevels>(std::move(a));
    auto ys = std::make_shared<PointedSSetLevels>(std::move(b));
    PointedSSetLevels z;
    z.arity = xs->arity + ys->arity;
    auto split = [xs](const std::vector<int>& p) {
        std::vector<int> pa(p.begin(), p.begin() + xs->arity);
        std::vector<int> pb(p.begin() + xs->arity, p.end());
        return std::pair(pa, pb);
    };
    z.level = [xs, ys, split](const std::vector<int>& p) {
        auto [pa, pb] = split(p);
        auto la = xs->level(pa);
        auto lb = ys->level(pb);
        std::vector<std::string> out;
        for (const auto& u : la)
            for (const auto& v : lb) out.push_back(u + "&" + v);
        return out;
    };
    z.face = [xs, ys, split](const std::vector<int>& p, long e, int dir, int i) -> long {
        auto [pa, pb] = split(p);
        long nb = long(ys->level(pb).size());
        long ea = e / nb, eb = e % nb;
        if (dir < xs->arity) {
            long fa = xs->face(pa, ea, dir, i);
            return fa < 0 ? -1 : fa * nb + eb;
        }
        long fb = ys->face(pb, eb, dir - xs->arity, i);
        if (fb < 0) return -1;
        --pb[size_t(dir - xs->arity)];
        return ea * long(ys->level(pb).size()) + fb;
    };
    z.degeneracy = [xs, ys, split](const std::vector<int>& p, long e, int dir, int i) -> long {
        auto [pa, pb] = split(p);
        long nb = long(ys->level(pb).size());
        long ea = e / nb, eb = e % nb;
        if (dir < xs->arity) return xs->degeneracy(pa, ea, dir, i) * nb + eb;
        long fb = ys->degeneracy(pb, eb, dir - xs->arity, i);
        ++pb[size_t(dir - xs->arity)];
        return ea * long(ys->level(pb).size()) + fb;
    };
    return z;
}

Chain normalize_chain(const PointedSSetLevels& x, int m, const Chain& c) {
    Chain out;
    for (const auto& [e, v] : c)
        if (!is_degenerate(x, {m}, e)) out[e] = v;
    return out;
}

Chain boundary_chain(const PointedSSetLevels& x, int m, const Chain& c) {
    Chain out;
    for (const auto& [e, v] : c)
        for (int i = 0; i <= m; ++i) {
            long f = x.face({m}, e, 0, i);
            if (f < 0 || is_degenerate(x, {m - 1}, f)) continue;
            Int w = (i % 2 == 0 ? 1 : -1) * v;
            auto it = out.find(f);
            if (it == out.end()) {
                if (w != 0) out[f] = std::move(w);
            } else {
                it->second += w;
                if (it->second == 0) out.erase(it);
            }
        }
    return out;
}

Chain add_chains(Chain a, const Chain& b, const Int& scale) {
    for (const auto& [e, v] : b) {
        a[e] += scale * v;
        if (a[e] == 0) a.erase(e);
    }
    return a;
}

SimplicialComplex tetra_boundary() {
    SimplicialComplex k;
    k.add_simplex({0, 1, 2});
    k.add_simplex({0, 1, 3});
    k.add_simplex({0, 2, 3});
    k.add_simplex({1, 2, 3});
    return k;
}

}  // namespace

TEST_CASE("circle provider satisfies the simplicial identities and has the right homology") {
    auto s1 = circle();
    verify_levels(s1, {5});
    auto cc = normalized_chains(s1, 4);
    CHECK(cc.dim(0) == 0);
    CHECK(cc.dim(1) == 1);
    CHECK(cc.dim(2) == 0);
    CHECK(cc.dim(3) == 0);
    cc.verify();
    CHECK(homology(cc, 0).is_zero());
    CHECK(homology(cc, 1).is_free_of_rank(1));
    CHECK(homology(cc, 2).is_zero());
}

TEST_CASE("verify_levels rejects a provider with a broken face map") {
    auto bad = circle();
    auto good_face = bad.face;
    bad.face = [good_face](const std::vector<int>& p, long e, int dir, int i) -> long {
        if (p[0] == 2 && i == 1) return e;  // misroute one face
        return good_face(p, e, dir, i);
    };
    CHECK_THROWS_AS(verify_levels(bad, {3}), internal_invariant_error);
}

TEST_CASE("pointed full simplex is acyclic") {
    SimplicialComplex k;
    k.add_simplex({0, 1, 2, 3});
    auto x = sset_of_complex(k, 0);
    verify_levels(x, {4});
    auto cc = normalized_chains(x, 4);
    for (int d = 0; d <= 3; ++d) CHECK(homology(cc, d).is_zero());
}

TEST_CASE("complex_chains worked examples") {
    SUBCASE("three isolated points") {
        SimplicialComplex k;
        k.add_simplex({0});
        k.add_simplex({1});
        k.add_simplex({2});
        auto red = complex_chains(k, true);
        red.verify();
        CHECK(homology(red, 0) == AbGroup{2, {}});
        CHECK(homology(red, -1).is_zero());
        auto unred = complex_chains(k, false);
        CHECK(homology(unred, 0) == AbGroup{3, {}});
    }
    SUBCASE("boundary of a tetrahedron is a 2-sphere") {
        auto k = tetra_boundary();
        CHECK(k.dimension() == 2);
        CHECK(k.simplices.size() == 14);
        auto cc = complex_chains(k, true);
        cc.verify();
        CHECK(cc.euler_characteristic() == 1);  // augmented: 2 - 1
        CHECK(homology(cc, 0).is_zero());
        CHECK(homology(cc, 1).is_zero());
        CHECK(homology(cc, 2).is_free_of_rank(1));
    }
    SUBCASE("full simplex on five vertices is acyclic") {
        SimplicialComplex k;
        k.add_simplex({0, 1, 2, 3, 4});
        auto cc = complex_chains(k, true);
        for (int d = 0; d <= 4; ++d) CHECK(homology(cc, d).is_zero());
    }
}

TEST_CASE("sset route and simplicial-complex route compute the same homology") {
    auto check_both = [](const SimplicialComplex& k, int pv) {
        auto red = complex_chains(k, true);
        auto xr = sset_of_complex(k, pv);
        auto ccr = normalized_chains(xr, k.dimension() + 1);
        auto unred = complex_chains(k, false);
        auto xu = sset_of_complex(k, -1);
        auto ccu = normalized_chains(xu, k.dimension() + 1);
        for (int d = 0; d <= k.dimension(); ++d) {
            CHECK(homology(red, d) == homology(ccr, d));
            CHECK(homology(unred, d) == homology(ccu, d));
        }
    };
    SUBCASE("triangle boundary") {
        SimplicialComplex k;
        k.add_simplex({0, 1});
        k.add_simplex({1, 2});
        k.add_simplex({0, 2});
        check_both(k, 0);
        auto cc = normalized_chains(sset_of_complex(k, 0), 2);
        CHECK(homology(cc, 1).is_free_of_rank(1));
    }
    SUBCASE("tetrahedron boundary") { check_both(tetra_boundary(), 2); }
    SUBCASE("random complexes") {
        auto& g = rng();
        std::uniform_int_distribution<int> nsimp(3, 6), sz(1, 4), vd(0, 5);
        for (int trial = 0; trial < 10; ++trial) {
            SimplicialComplex k;
            int s = nsimp(g);
            for (int t = 0; t < s; ++t) {
                std::set<int> verts;
                int target = sz(g);
                while (int(verts.size()) < target) verts.insert(vd(g));
                k.add_simplex(std::vector<int>(verts.begin(), verts.end()));
            }
            int pv = (*k.simplices.begin())[0];
            check_both(k, pv);
        }
    }
}

TEST_CASE("sset_of_complex providers satisfy the simplicial identities") {
    SimplicialComplex k;
    k.add_simplex({0, 1});
    k.add_simplex({1, 2});
    k.add_simplex({0, 2});
    verify_levels(sset_of_complex(k, 0), {4});
    verify_levels(sset_of_complex(k, -1), {4});
    auto x = sset_of_complex(k, -1);
    // non-degenerate tuples are the strictly increasing ones, matching the simplices
    auto cc = normalized_chains(x, 3);
    CHECK(cc.dim(0) == 3);
    CHECK(cc.dim(1) == 3);
    CHECK(cc.dim(2) == 0);
}

TEST_CASE("shuffle table for bidegree (1,2)") {
    // x-step position sets {0}, {1}, {2} give signs +, -, +
    SimplicialComplex k;
    k.add_simplex({0, 1, 2});
    auto x = sset_of_complex(k, -1);
    auto z = smash(x, x);
    auto lvl1 = x.level({1});
    auto lvl2 = x.level({2});
    long e01 = -1, e012 = -1;
    for (long i = 0; i < long(lvl1.size()); ++i)
        if (lvl1[size_t(i)] == "0,1") e01 = i;
    for (long i = 0; i < long(lvl2.size()); ++i)
        if (lvl2[size_t(i)] == "0,1,2") e012 = i;
    REQUIRE(e01 >= 0);
    REQUIRE(e012 >= 0);
    long n3 = long(x.level({3}).size());
    Chain a{{e01, 1}}, b{{e012, 1}};
    auto combine = [n3](long p, long q) { return p * n3 + q; };
    auto prod = shuffle_product(x, 1, a, x, 2, b, combine);
    auto s = [&x](long e, int lvl, int i) { return x.degeneracy({lvl}, e, 0, i); };
    Chain expect;
    expect[combine(s(s(e01, 1, 1), 2, 2), s(e012, 2, 0))] += 1;
    expect[combine(s(s(e01, 1, 0), 2, 2), s(e012, 2, 1))] += -1;
    expect[combine(s(s(e01, 1, 0), 2, 1), s(e012, 2, 2))] += 1;
    CHECK(prod == expect);
    // bilinearity in the coefficients
    Chain a2{{e01, 2}}, b3{{e012, -3}};
    auto prod6 = shuffle_product(x, 1, a2, x, 2, b3, combine);
    Chain scaled;
    for (const auto& [e, v] : prod) scaled[e] = -6 * v;
    CHECK(prod6 == scaled);
    CHECK(z.level({3}).size() == size_t(n3 * n3));
}

TEST_CASE("shuffle product is a chain map") {
    auto x = sset_of_complex(tetra_boundary(), 0);
    SimplicialComplex full;
    full.add_simplex({0, 1, 2});
    auto y = sset_of_complex(full, 0);
    auto& g = rng();
    std::uniform_int_distribution<int> coeff(-3, 3);
    for (auto [m, n] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 1}, {2, 2}}) {
        auto z = smash(x, y);
        auto pick = [&](const PointedSSetLevels& s, int deg) {
            Chain c;
            long total = long(s.level({deg}).size());
            std::vector<long> basis;
            for (long e = 0; e < total; ++e)
                if (!is_degenerate(s, {deg}, e)) basis.push_back(e);
            REQUIRE(!basis.empty());
            std::uniform_int_distribution<size_t> pe(0, basis.size() - 1);
            for (int t = 0; t < 3; ++t) {
                int v = coeff(g);
                if (v == 0) continue;
                c[basis[pe(g)]] += v;
            }
            for (auto it = c.begin(); it != c.end();)
                it = it->second == 0 ? c.erase(it) : std::next(it);
            return c;
        };
        for (int trial = 0; trial < 4; ++trial) {
            Chain a = pick(x, m), b = pick(y, n);
            long nbot = long(y.level({m + n}).size());
            long nbot1 = long(y.level({m + n - 1}).size());
            auto comb = [nbot](long p, long q) { return p * nbot + q; };
            auto comb1 = [nbot1](long p, long q) { return p * nbot1 + q; };
            auto lhs = boundary_chain(
                z, m + n, normalize_chain(z, m + n, shuffle_product(x, m, a, y, n, b, comb)));
            auto da = boundary_chain(x, m, a);
            auto db = boundary_chain(y, n, b);
            auto t1 = normalize_chain(z, m + n - 1, shuffle_product(x, m - 1, da, y, n, b, comb1));
            auto t2 = normalize_chain(z, m + n - 1, shuffle_product(x, m, a, y, n - 1, db, comb1));
            auto rhs = add_chains(t1, t2, m % 2 == 0 ? 1 : -1);
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("smash of two circles is a 2-sphere") {
    auto z = smash(circle(), circle());
    verify_levels(z, {4});
    auto cc = normalized_chains(z, 3);
    CHECK(cc.dim(1) == 1);
    CHECK(cc.dim(2) == 2);
    CHECK(cc.dim(3) == 0);
    CHECK(homology(cc, 1).is_zero());
    CHECK(homology(cc, 2).is_free_of_rank(1));
}

TEST_CASE("multitotal chains of a 1-fold object match normalized chains") {
    auto s1 = circle();
    auto nc = normalized_chains(s1, 3);
    auto mt = multitotal_chains(s1, 3);
    for (int d = 0; d <= 3; ++d) {
        CHECK(mt.dim(d) == nc.dim(d));
        CHECK(homology(mt, d) == homology(nc, d));
    }
    CHECK(mt.labels.at(1)[0] == "1|c1");
}

TEST_CASE("multitotal chains of an external product of circles") {
    auto s1 = circle();
    auto z = external(s1, s1);
    CHECK(z.arity == 2);
    verify_levels(z, {3, 3});
    auto mt = multitotal_chains(z, 4);
    CHECK(homology(mt, 0).is_zero());
    CHECK(homology(mt, 1).is_zero());
    CHECK(homology(mt, 2).is_free_of_rank(1));
    CHECK(homology(mt, 3).is_zero());
    // matches the tensor product of the normalized chain complexes
    auto nc = normalized_chains(s1, 4);
    auto tensor = total_complex(tensor_bicomplex(nc, nc));
    for (int d = 0; d <= 3; ++d) {
        CHECK(mt.dim(d) == tensor.dim(d));
        CHECK(homology(mt, d) == homology(tensor, d));
    }
}

TEST_CASE("multitotal homology does not depend on the direction order") {
    SimplicialComplex tri;
    tri.add_simplex({0, 1});
    tri.add_simplex({1, 2});
    tri.add_simplex({0, 2});
    auto a = sset_of_complex(tri, 0);
    auto b = circle();
    auto ab = multitotal_chains(external(a, b), 4);
    auto ba = multitotal_chains(external(b, a), 4);
    for (int d = 0; d <= 3; ++d) CHECK(homology(ab, d) == homology(ba, d));
    CHECK(homology(ab, 2).is_free_of_rank(1));
    // triple product: three circles give a 3-sphere
    auto s3 = multitotal_chains(external(external(b, b), b), 4);
    CHECK(homology(s3, 2).is_zero());
    CHECK(homology(s3, 3).is_free_of_rank(1));
}

TEST_CASE("add_simplex closes under faces and rejects repeated vertices") {
    SimplicialComplex k;
    k.add_simplex({2, 0, 5});
    CHECK(k.has({0, 2, 5}));
    CHECK(k.has({0, 5}));
    CHECK(k.has({2}));
    CHECK(!k.has({1}));
    CHECK(k.vertex_count == 6);
    CHECK_THROWS_AS(k.add_simplex({1, 1, 2}), std::invalid_argument);
    SimplicialComplex empty;
    CHECK(empty.dimension() == -1);
    auto cc = complex_chains(empty, false);
    CHECK(cc.max_degree() < cc.min_degree());
}
