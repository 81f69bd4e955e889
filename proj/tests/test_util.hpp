#pragma once

// Shared oracle helpers for the test binaries. Everything here is written to
// be independent of the library's main code paths: brute-force enumeration,
// Laplace determinants, and closure computations used to cross-check the
// optimized implementations.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "stmod/coeffring.hpp"
#include "stmod/util.hpp"
#include "stmod/zhomology.hpp"

namespace stmod::testutil {

inline std::mt19937& rng() {
    static std::mt19937 gen(0x5eed1234u);
    return gen;
}

inline int rand_int(int lo, int hi) {
    std::uniform_int_distribution<int> d(lo, hi);
    return d(rng());
}

inline RMat random_rmat(const CoeffRing& R, int rows, int cols) {
    RMat m(R, rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m.at(i, j) = uint8_t(rand_int(0, R.size - 1));
    return m;
}

// Random invertible matrix built from elementary operations applied to the
// identity, so invertibility holds by construction.
inline RMat random_invertible(const CoeffRing& R, int n, int ops = 12) {
    RMat m = RMat::identity(R, n);
    for (int s = 0; s < ops; ++s) {
        int kind = rand_int(0, 2);
        int i = rand_int(0, n - 1), j = rand_int(0, n - 1);
        if (kind == 0 && i != j) {
            for (int c = 0; c < n; ++c) std::swap(m.at(i, c), m.at(j, c));
        } else if (kind == 1) {
            int u = R.units[size_t(rand_int(0, int(R.units.size()) - 1))];
            for (int c = 0; c < n; ++c) m.at(i, c) = uint8_t(R.mul(u, m.at(i, c)));
        } else if (i != j) {
            int f = rand_int(0, R.size - 1);
            for (int c = 0; c < n; ++c)
                m.at(i, c) = uint8_t(R.add(m.at(i, c), R.mul(f, m.at(j, c))));
        }
    }
    return m;
}

// Vectors in R^n encoded as ids in base |R|: id = sum coords[i] * |R|^i.
inline long encode_vec(const CoeffRing& R, const std::vector<int>& v) {
    long id = 0;
    for (size_t i = v.size(); i-- > 0;) id = id * R.size + v[i];
    return id;
}

inline std::vector<int> decode_vec(const CoeffRing& R, long id, int n) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) {
        v[i] = int(id % R.size);
        id /= R.size;
    }
    return v;
}

inline long add_ids(const CoeffRing& R, long a, long b, int n) {
    long out = 0, mult = 1;
    for (int i = 0; i < n; ++i) {
        out += long(R.add(int(a % R.size), int(b % R.size))) * mult;
        a /= R.size;
        b /= R.size;
        mult *= R.size;
    }
    return out;
}

inline long scale_id(const CoeffRing& R, int lambda, long a, int n) {
    long out = 0, mult = 1;
    for (int i = 0; i < n; ++i) {
        out += long(R.mul(lambda, int(a % R.size))) * mult;
        a /= R.size;
        mult *= R.size;
    }
    return out;
}

// R-span of the given vectors inside R^n, as the full set of element ids.
// Closure of {lambda*g} under addition; exhaustive, used only at |R^n| <= 4096.
inline std::set<long> span_ids(const CoeffRing& R, const std::vector<std::vector<int>>& gens,
                               int n) {
    std::vector<long> seeds;
    for (const auto& g : gens) {
        long gid = encode_vec(R, g);
        for (int lambda = 0; lambda < R.size; ++lambda) seeds.push_back(scale_id(R, lambda, gid, n));
    }
    std::set<long> s{0};
    std::vector<long> work{0};
    while (!work.empty()) {
        long a = work.back();
        work.pop_back();
        for (long t : seeds) {
            long b = add_ids(R, a, t, n);
            if (s.insert(b).second) work.push_back(b);
        }
    }
    return s;
}

inline std::vector<std::vector<int>> columns_of(const RMat& m) {
    std::vector<std::vector<int>> cols;
    for (int j = 0; j < m.cols; ++j) {
        std::vector<int> c(m.rows);
        for (int i = 0; i < m.rows; ++i) c[i] = m.at(i, j);
        cols.push_back(c);
    }
    return cols;
}

// Oracle for cokernel_projective_rank by exhaustive enumeration: build the
// column span V inside R^r, then X = R^r/V is free of rank d iff |X| = |R|^d
// with d the minimal generator count dim_{F_p}(X / pi X) (Nakayama plus a
// counting argument: a surjection R^d -> X between equal-size sets is a
// bijection).
inline std::optional<int> free_rank_oracle(const RMat& m) {
    const CoeffRing& R = *m.R;
    int r = m.rows;
    auto V = span_ids(R, columns_of(m), r);
    long total = 1;
    for (int i = 0; i < r; ++i) total *= R.size;
    long xsize = total / long(V.size());
    // pi*R^r + V: adjoin pi*e_i to the generators
    auto gens = columns_of(m);
    for (int i = 0; i < r; ++i) {
        std::vector<int> e(r, 0);
        e[i] = R.pi;
        gens.push_back(e);
    }
    auto W = span_ids(R, gens, r);
    long quot = total / long(W.size());  // |X / pi X| = p^mu
    int mu = 0;
    long t = quot;
    while (t > 1 && t % R.p == 0) {
        t /= R.p;
        ++mu;
    }
    if (t != 1) throw internal_invariant_error("X/piX size is not a p-power");
    long expect = 1;
    for (int i = 0; i < mu; ++i) expect *= R.size;
    if (xsize == expect) return mu;
    return std::nullopt;
}

// Exhaustive complement search for tiny ambient modules: P is a summand of
// R^n iff some tuple of <= n vectors spans a Q with P ∩ Q = 0 and |P||Q| = |R^n|.
inline bool summand_oracle(const CoeffRing& R, const std::vector<std::vector<int>>& gens, int n) {
    auto P = span_ids(R, gens, n);
    long total = 1;
    for (int i = 0; i < n; ++i) total *= R.size;
    if (long(P.size()) == total) return true;
    long need = total / long(P.size());
    // candidate generator tuples, sizes 0..n, by ids
    std::vector<std::vector<long>> stack{{}};
    while (!stack.empty()) {
        auto tup = stack.back();
        stack.pop_back();
        std::vector<std::vector<int>> qgens;
        for (long id : tup) qgens.push_back(decode_vec(R, id, n));
        auto Q = span_ids(R, qgens, n);
        if (long(Q.size()) == need) {
            bool trivial_meet = true;
            for (long q : Q)
                if (q != 0 && P.count(q)) {
                    trivial_meet = false;
                    break;
                }
            if (trivial_meet) return true;
        }
        if (int(tup.size()) < n && long(Q.size()) < need)
            for (long id = 1; id < total; ++id) {
                auto next = tup;
                next.push_back(id);
                stack.push_back(next);
            }
    }
    return false;
}

// Field rank by exhaustive minor search: largest k with a nonvanishing k x k
// minor, determinants by cofactor expansion.
inline int minor_rank_oracle(const RMat& m) {
    const CoeffRing& R = *m.R;
    auto det = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
        int k = int(rows.size());
        std::vector<int> perm(k);
        for (int i = 0; i < k; ++i) perm[i] = i;
        int acc = 0;
        do {
            int prod = 1;
            for (int i = 0; i < k && prod; ++i) prod = R.mul(prod, m.at(rows[i], cols[perm[i]]));
            if (!prod) continue;
            int sgn = perm_sign(perm);
            acc = sgn > 0 ? R.add(acc, prod) : R.sub(acc, prod);
        } while (std::next_permutation(perm.begin(), perm.end()));
        return acc;
    };
    int best = 0;
    int kmax = std::min(m.rows, m.cols);
    for (int k = 1; k <= kmax; ++k) {
        bool found = false;
        std::vector<int> rows(k), cols(k);
        std::vector<bool> rsel(m.rows, false);
        // iterate over k-subsets of rows and cols via index vectors
        std::vector<int> ri(k), ci(k);
        for (int i = 0; i < k; ++i) ri[i] = i;
        while (true) {
            for (int i = 0; i < k; ++i) ci[i] = i;
            while (true) {
                if (det(ri, ci)) {
                    found = true;
                    break;
                }
                int t = k - 1;
                while (t >= 0 && ci[t] == m.cols - k + t) --t;
                if (t < 0) break;
                ++ci[t];
                for (int u = t + 1; u < k; ++u) ci[u] = ci[u - 1] + 1;
            }
            if (found) break;
            int t = k - 1;
            while (t >= 0 && ri[t] == m.rows - k + t) --t;
            if (t < 0) break;
            ++ri[t];
            for (int u = t + 1; u < k; ++u) ri[u] = ri[u - 1] + 1;
        }
        (void)rsel;
        if (found)
            best = k;
        else
            break;  // no k-minor implies no larger minor
    }
    return best;
}

inline std::vector<std::vector<Int>> to_dense(const SparseZMat& m) {
    std::vector<std::vector<Int>> d(size_t(m.rows), std::vector<Int>(size_t(m.cols), Int(0)));
    for (int i = 0; i < m.rows; ++i)
        for (const auto& [j, v] : m.data[size_t(i)]) d[size_t(i)][size_t(j)] = v;
    return d;
}

// Fraction-free determinant (Bareiss); intermediate divisions are exact.
inline Int bareiss_det(std::vector<std::vector<Int>> a) {
    int n = int(a.size());
    if (n == 0) return 1;
    Int prev = 1;
    int sign = 1;
    for (int k = 0; k + 1 < n; ++k) {
        int p = -1;
        for (int i = k; i < n; ++i)
            if (a[size_t(i)][size_t(k)] != 0) {
                p = i;
                break;
            }
        if (p < 0) return 0;
        if (p != k) {
            std::swap(a[size_t(p)], a[size_t(k)]);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j)
                a[size_t(i)][size_t(j)] =
                    (a[size_t(i)][size_t(j)] * a[size_t(k)][size_t(k)] -
                     a[size_t(i)][size_t(k)] * a[size_t(k)][size_t(j)]) /
                    prev;
        prev = a[size_t(k)][size_t(k)];
    }
    return sign * a[size_t(n - 1)][size_t(n - 1)];
}

// Invariant factors from minor gcds: d_k = g_k / g_{k-1} with g_k the gcd of
// all k x k minors (g_0 = 1). Independent route used as the SNF oracle.
inline std::vector<Int> minor_gcd_factors(const SparseZMat& m) {
    auto dense = to_dense(m);
    std::vector<Int> g{1};
    int kmax = std::min(m.rows, m.cols);
    for (int k = 1; k <= kmax; ++k) {
        Int acc = 0;
        std::vector<int> ri(static_cast<size_t>(k)), ci(static_cast<size_t>(k));
        for (int i = 0; i < k; ++i) ri[size_t(i)] = i;
        while (true) {
            for (int i = 0; i < k; ++i) ci[size_t(i)] = i;
            while (true) {
                std::vector<std::vector<Int>> sub(static_cast<size_t>(k),
                                                  std::vector<Int>(static_cast<size_t>(k)));
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < k; ++j)
                        sub[size_t(i)][size_t(j)] = dense[size_t(ri[size_t(i)])][size_t(ci[size_t(j)])];
                Int d = bareiss_det(sub);
                mpz_gcd(acc.get_mpz_t(), acc.get_mpz_t(), d.get_mpz_t());
                int t = k - 1;
                while (t >= 0 && ci[size_t(t)] == m.cols - k + t) --t;
                if (t < 0) break;
                ++ci[size_t(t)];
                for (int u = t + 1; u < k; ++u) ci[size_t(u)] = ci[size_t(u - 1)] + 1;
            }
            int t = k - 1;
            while (t >= 0 && ri[size_t(t)] == m.rows - k + t) --t;
            if (t < 0) break;
            ++ri[size_t(t)];
            for (int u = t + 1; u < k; ++u) ri[size_t(u)] = ri[size_t(u - 1)] + 1;
        }
        if (acc == 0) break;
        g.push_back(acc);
    }
    std::vector<Int> factors;
    for (size_t k = 1; k < g.size(); ++k) factors.push_back(g[k] / g[k - 1]);
    return factors;
}

inline SparseZMat random_sparse(int rows, int cols, int bound, int fill_percent = 60) {
    SparseZMat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            if (rand_int(0, 99) >= fill_percent) continue;
            int v = rand_int(-bound, bound);
            if (v) m.add(i, j, v);
        }
    return m;
}

// Random unimodular integer matrix from elementary operations.
inline SparseZMat random_unimodular(int n, int ops = 15) {
    std::vector<std::vector<Int>> a(size_t(n), std::vector<Int>(size_t(n), Int(0)));
    for (int i = 0; i < n; ++i) a[size_t(i)][size_t(i)] = 1;
    for (int s = 0; s < ops; ++s) {
        int i = rand_int(0, n - 1), j = rand_int(0, n - 1);
        if (i == j) continue;
        int t = rand_int(-2, 2);
        for (int c = 0; c < n; ++c) a[size_t(i)][size_t(c)] += t * a[size_t(j)][size_t(c)];
    }
    SparseZMat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (a[size_t(i)][size_t(j)] != 0) m.add(i, j, a[size_t(i)][size_t(j)]);
    return m;
}

// Random valid chain complex in degrees 0..max_deg: each next differential
// factors through the kernel of the previous one.
inline ChainComplex random_complex(int max_deg, int max_dim, int bound) {
    ChainComplex cc;
    std::vector<int> dims(size_t(max_deg) + 1);
    for (int d = 0; d <= max_deg; ++d) dims[size_t(d)] = rand_int(1, max_dim);
    for (int d = 0; d <= max_deg; ++d) {
        std::vector<std::string> l;
        for (int i = 0; i < dims[size_t(d)]; ++i)
            l.push_back("e" + std::to_string(d) + "_" + std::to_string(i));
        cc.set_labels(d, std::move(l));
    }
    SparseZMat prev;  // differential out of degree d-1
    for (int d = 1; d <= max_deg; ++d) {
        int cd = dims[size_t(d)], cdm = dims[size_t(d - 1)];
        SparseZMat diff(cdm, cd);
        if (d == 1) {
            diff = random_sparse(cdm, cd, bound);
        } else {
            auto K = kernel_basis(prev);  // columns of length cdm
            for (int j = 0; j < cd; ++j)
                for (size_t t = 0; t < K.size(); ++t) {
                    int c = rand_int(-bound, bound);
                    if (!c) continue;
                    for (int i = 0; i < cdm; ++i) diff.add(i, j, Int(c) * K[t][size_t(i)]);
                }
        }
        cc.set_diff(d, diff);
        prev = diff;
    }
    return cc;
}

// Prime-power multiset of the torsion subgroup, for order-insensitive
// comparison of abelian groups.
inline std::multiset<long> pp_multiset(const AbGroup& g) {
    std::multiset<long> out;
    for (const auto& t : g.torsion) {
        long v = t.get_si();
        for (long p = 2; p * p <= v || v > 1; ++p) {
            if (p * p > v && v > 1) {
                out.insert(v);
                break;
            }
            long pk = 1;
            while (v % p == 0) {
                v /= p;
                pk *= p;
            }
            if (pk > 1) out.insert(pk);
        }
    }
    return out;
}

// Kuenneth prediction for H_n of a tensor product of free complexes.
inline std::pair<long, std::multiset<long>> kuenneth_rank_torsion(
    const std::vector<AbGroup>& ha, const std::vector<AbGroup>& hb, int n) {
    long rank = 0;
    std::multiset<long> tors;
    auto add_tensor = [&](const AbGroup& x, const AbGroup& y) {
        rank += x.free_rank * y.free_rank;
        auto addpp = [&](long v, long times) {
            std::multiset<long> single = pp_multiset(AbGroup{0, {Int(v)}});
            for (long t = 0; t < times; ++t)
                for (long s : single) tors.insert(s);
        };
        for (const auto& t : y.torsion) addpp(t.get_si(), x.free_rank);
        for (const auto& t : x.torsion) addpp(t.get_si(), y.free_rank);
        for (const auto& s : x.torsion)
            for (const auto& t : y.torsion) {
                Int g;
                mpz_gcd(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t());
                if (g > 1) addpp(g.get_si(), 1);
            }
    };
    auto add_tor = [&](const AbGroup& x, const AbGroup& y) {
        for (const auto& s : x.torsion)
            for (const auto& t : y.torsion) {
                Int g;
                mpz_gcd(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t());
                if (g > 1) {
                    std::multiset<long> single = pp_multiset(AbGroup{0, {g}});
                    for (long u : single) tors.insert(u);
                }
            }
    };
    for (int p = 0; p < int(ha.size()); ++p) {
        int q = n - p;
        if (q >= 0 && q < int(hb.size())) add_tensor(ha[size_t(p)], hb[size_t(q)]);
        int q2 = n - 1 - p;
        if (q2 >= 0 && q2 < int(hb.size())) add_tor(ha[size_t(p)], hb[size_t(q2)]);
    }
    return {rank, tors};
}

}  // namespace stmod::testutil
