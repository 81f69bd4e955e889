#include "stmod/simplicial.hpp"

#include <algorithm>
#include <memory>
#include <sstream>

namespace stmod {

namespace {

std::string join_ints(const std::vector<int>& v, char sep) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += std::to_string(v[i]);
    }
    return s;
}

}  // namespace

bool is_degenerate(const PointedSSetLevels& x, const std::vector<int>& p, long e) {
    for (int dir = 0; dir < x.arity; ++dir) {
        if (p[size_t(dir)] == 0) continue;
        std::vector<int> pm = p;
        --pm[size_t(dir)];
        for (int i = 0; i < p[size_t(dir)]; ++i) {
            long y = x.face(p, e, dir, i);
            if (y < 0) continue;
            if (x.degeneracy(pm, y, dir, i) == e) return true;
        }
    }
    return false;
}

namespace {

// face/degeneracy with basepoint propagation, tracking the multidegree
struct Nav {
    const PointedSSetLevels& x;

    std::pair<std::vector<int>, long> d(std::pair<std::vector<int>, long> s, int dir, int i) const {
        if (s.second < 0) {
            --s.first[size_t(dir)];
            return s;
        }
        long e = x.face(s.first, s.second, dir, i);
        --s.first[size_t(dir)];
        s.second = e;
        return s;
    }
    std::pair<std::vector<int>, long> s(std::pair<std::vector<int>, long> t, int dir, int i) const {
        if (t.second < 0) {
            ++t.first[size_t(dir)];
            return t;
        }
        long e = x.degeneracy(t.first, t.second, dir, i);
        ++t.first[size_t(dir)];
        t.second = e;
        return t;
    }
};

void check_eq(const std::pair<std::vector<int>, long>& a, const std::pair<std::vector<int>, long>& b,
              const char* what) {
    if (a.second != b.second)
        throw internal_invariant_error(std::string("simplicial identity failed: ") + what);
}

}  // namespace

void verify_levels(const PointedSSetLevels& x, const std::vector<int>& max_p) {
    Nav nav{x};
    std::vector<int> p(size_t(x.arity), 0);
    while (true) {
        long n = long(x.level(p).size());
        for (long e = 0; e < n; ++e) {
            std::pair<std::vector<int>, long> s0{p, e};
            for (int a = 0; a < x.arity; ++a) {
                int pa = p[size_t(a)];
                // d_i d_j = d_{j-1} d_i for i < j
                for (int j = 1; j <= pa; ++j)
                    for (int i = 0; i < j; ++i)
                        check_eq(nav.d(nav.d(s0, a, j), a, i), nav.d(nav.d(s0, a, i), a, j - 1),
                                 "dd");
                // s_i s_j = s_{j+1} s_i for i <= j
                for (int j = 0; j <= pa; ++j)
                    for (int i = 0; i <= j; ++i)
                        check_eq(nav.s(nav.s(s0, a, j), a, i), nav.s(nav.s(s0, a, i), a, j + 1),
                                 "ss");
                // d_i s_j relations
                for (int j = 0; j <= pa; ++j)
                    for (int i = 0; i <= pa + 1; ++i) {
                        auto lhs = nav.d(nav.s(s0, a, j), a, i);
                        if (i < j)
                            check_eq(lhs, nav.s(nav.d(s0, a, i), a, j - 1), "ds");
                        else if (i == j || i == j + 1)
                            check_eq(lhs, s0, "ds-id");
                        else
                            check_eq(lhs, nav.s(nav.d(s0, a, i - 1), a, j), "ds");
                    }
                // cross-direction commutation
                for (int b = a + 1; b < x.arity; ++b) {
                    int pb = p[size_t(b)];
                    for (int i = 0; i <= pa && pa > 0; ++i)
                        for (int j = 0; j <= pb && pb > 0; ++j)
                            check_eq(nav.d(nav.d(s0, a, i), b, j), nav.d(nav.d(s0, b, j), a, i),
                                     "dd-cross");
                    for (int i = 0; i <= pa; ++i)
                        for (int j = 0; j <= pb; ++j)
                            check_eq(nav.s(nav.s(s0, a, i), b, j), nav.s(nav.s(s0, b, j), a, i),
                                     "ss-cross");
                    for (int i = 0; i <= pa && pa > 0; ++i)
                        for (int j = 0; j <= pb; ++j)
                            check_eq(nav.s(nav.d(s0, a, i), b, j), nav.d(nav.s(s0, b, j), a, i),
                                     "ds-cross");
                }
            }
        }
        // next multidegree below max_p
        int t = x.arity - 1;
        while (t >= 0 && p[size_t(t)] == max_p[size_t(t)]) {
            p[size_t(t)] = 0;
            --t;
        }
        if (t < 0) break;
        ++p[size_t(t)];
    }
}

namespace {

struct NormalizedLevel {
    std::vector<std::string> labels;   // labels of the non-degenerate elements
    std::vector<long> basis;           // their indices in the full level
    std::vector<long> pos;             // full index -> basis position or -1
};

NormalizedLevel normalize_level(const PointedSSetLevels& x, const std::vector<int>& p) {
    NormalizedLevel out;
    auto full = x.level(p);
    out.pos.assign(full.size(), -1);
    for (long e = 0; e < long(full.size()); ++e) {
        if (is_degenerate(x, p, e)) continue;
        out.pos[size_t(e)] = long(out.basis.size());
        out.basis.push_back(e);
        out.labels.push_back(full[size_t(e)]);
    }
    return out;
}

}  // namespace

ChainComplex normalized_chains(const PointedSSetLevels& x, int max_deg) {
    if (x.arity != 1) throw unsupported_operation_error("normalized_chains needs a 1-fold object");
    std::vector<NormalizedLevel> levels;
    for (int d = 0; d <= max_deg; ++d) levels.push_back(normalize_level(x, {d}));
    ChainComplex cc;
    for (int d = 0; d <= max_deg; ++d) cc.set_labels(d, levels[size_t(d)].labels);
    for (int d = 1; d <= max_deg; ++d) {
        const auto& cur = levels[size_t(d)];
        const auto& below = levels[size_t(d - 1)];
        SparseZMat m(int(below.basis.size()), int(cur.basis.size()));
        for (long col = 0; col < long(cur.basis.size()); ++col) {
            long e = cur.basis[size_t(col)];
            for (int i = 0; i <= d; ++i) {
                long f = x.face({d}, e, 0, i);
                if (f < 0 || below.pos[size_t(f)] < 0) continue;
                m.add(int(below.pos[size_t(f)]), int(col), i % 2 == 0 ? 1 : -1);
            }
        }
        cc.set_diff(d, std::move(m));
    }
    return cc;
}

ChainComplex multitotal_chains(const PointedSSetLevels& x, int max_total_deg) {
    // multidegrees with |p| = n, lex ascending, each with its normalization
    std::map<std::vector<int>, NormalizedLevel> levels;
    std::map<int, std::vector<std::vector<int>>> by_total;
    {
        std::vector<std::vector<int>> all{std::vector<int>(size_t(x.arity), 0)};
        for (int dir = 0; dir < x.arity; ++dir) {
            std::vector<std::vector<int>> next;
            for (const auto& p : all) {
                int used = 0;
                for (int v : p) used += v;
                for (int v = 0; used + v <= max_total_deg; ++v) {
                    auto q = p;
                    q[size_t(dir)] = v;
                    next.push_back(q);
                }
            }
            all = std::move(next);
        }
        std::sort(all.begin(), all.end());
        for (const auto& p : all) {
            int n = 0;
            for (int v : p) n += v;
            by_total[n].push_back(p);
        }
    }
    std::map<std::vector<int>, long> offset;
    ChainComplex cc;
    for (const auto& [n, ps] : by_total) {
        std::vector<std::string> lab;
        for (const auto& p : ps) {
            auto lvl = normalize_level(x, p);
            offset[p] = long(lab.size());
            for (const auto& s : lvl.labels) lab.push_back(join_ints(p, ',') + "|" + s);
            levels[p] = std::move(lvl);
        }
        cc.set_labels(n, std::move(lab));
    }
    for (const auto& [n, ps] : by_total) {
        if (n == 0) continue;
        SparseZMat m(int(cc.dim(n - 1)), int(cc.dim(n)));
        for (const auto& p : ps) {
            const auto& cur = levels.at(p);
            long src = offset.at(p);
            for (int dir = 0; dir < x.arity; ++dir) {
                if (p[size_t(dir)] == 0) continue;
                auto q = p;
                --q[size_t(dir)];
                const auto& below = levels.at(q);
                long dst = offset.at(q);
                int prefix = 0;
                for (int t = 0; t < dir; ++t) prefix += p[size_t(t)];
                int sign0 = prefix % 2 == 0 ? 1 : -1;
                for (long col = 0; col < long(cur.basis.size()); ++col) {
                    long e = cur.basis[size_t(col)];
                    for (int i = 0; i <= p[size_t(dir)]; ++i) {
                        long f = x.face(p, e, dir, i);
                        if (f < 0 || below.pos[size_t(f)] < 0) continue;
                        m.add(int(dst + below.pos[size_t(f)]), int(src + col),
                              sign0 * (i % 2 == 0 ? 1 : -1));
                    }
                }
            }
        }
        cc.set_diff(n, std::move(m));
    }
    cc.verify();
    return cc;
}

Chain shuffle_product(const PointedSSetLevels& x, int m, const Chain& a,
                      const PointedSSetLevels& y, int n, const Chain& b,
                      const std::function<long(long, long)>& combine) {
    if (x.arity != 1 || y.arity != 1)
        throw unsupported_operation_error("shuffle_product needs 1-fold objects");
    Chain out;
    std::vector<int> A(static_cast<size_t>(m));  // positions of x-steps among 0..m+n-1
    for (int i = 0; i < m; ++i) A[size_t(i)] = i;
    auto pad = [](const PointedSSetLevels& s, int deg, long e, const std::vector<int>& js) {
        // apply degeneracies with ascending indices, tracking the level
        std::vector<int> p{deg};
        long cur = e;
        for (int j : js) {
            if (cur < 0) return cur;
            cur = s.degeneracy(p, cur, 0, j);
            ++p[0];
        }
        return cur;
    };
    while (true) {
        std::vector<int> B;
        {
            size_t ai = 0;
            for (int t = 0; t < m + n; ++t) {
                if (ai < A.size() && A[ai] == t)
                    ++ai;
                else
                    B.push_back(t);
            }
        }
        long inversions = 0;
        for (int av : A)
            for (int bv : B)
                if (av > bv) ++inversions;
        int sign = inversions % 2 == 0 ? 1 : -1;
        for (const auto& [ea, ca] : a) {
            long px = pad(x, m, ea, B);
            if (px < 0) continue;
            for (const auto& [eb, cb] : b) {
                long py = pad(y, n, eb, A);
                if (py < 0) continue;
                long target = combine(px, py);
                if (target < 0) continue;
                Int v = sign * ca * cb;
                auto it = out.find(target);
                if (it == out.end()) {
                    if (v != 0) out[target] = std::move(v);
                } else {
                    it->second += v;
                    if (it->second == 0) out.erase(it);
                }
            }
        }
        if (m == 0) break;
        int t = m - 1;
        while (t >= 0 && A[size_t(t)] == n + t) --t;
        if (t < 0) break;
        ++A[size_t(t)];
        for (int u = t + 1; u < m; ++u) A[size_t(u)] = A[size_t(u - 1)] + 1;
    }
    return out;
}

void SimplicialComplex::add_simplex(std::vector<int> s) {
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end())
        throw std::invalid_argument("simplex with repeated vertex");
    if (s.empty()) return;
    if (s.back() >= vertex_count) vertex_count = s.back() + 1;
    unsigned r = unsigned(s.size());
    for (unsigned mask = 1; mask < (1u << r); ++mask) {
        std::vector<int> sub;
        for (unsigned t = 0; t < r; ++t)
            if (mask & (1u << t)) sub.push_back(s[size_t(t)]);
        simplices.insert(std::move(sub));
    }
}

int SimplicialComplex::dimension() const {
    int d = -1;
    for (const auto& s : simplices) d = std::max(d, int(s.size()) - 1);
    return d;
}

ChainComplex complex_chains(const SimplicialComplex& k, bool augmented) {
    std::map<int, std::vector<std::vector<int>>> by_dim;
    for (const auto& s : k.simplices) by_dim[int(s.size()) - 1].push_back(s);
    std::map<int, std::map<std::vector<int>, int>> index;
    auto vlabel = [&](int v) {
        return v < int(k.vertex_labels.size()) ? k.vertex_labels[size_t(v)] : "v" + std::to_string(v);
    };
    ChainComplex cc;
    if (augmented) cc.set_labels(-1, {"()"});
    for (const auto& [d, ss] : by_dim) {
        std::vector<std::string> lab;
        for (const auto& s : ss) {
            index[d][s] = int(lab.size());
            std::string l;
            for (size_t i = 0; i < s.size(); ++i) l += (i ? "." : "") + vlabel(s[i]);
            lab.push_back(l);
        }
        cc.set_labels(d, std::move(lab));
    }
    for (const auto& [d, ss] : by_dim) {
        if (d == 0) {
            if (!augmented) continue;
            SparseZMat m(1, int(ss.size()));
            for (size_t j = 0; j < ss.size(); ++j) m.add(0, int(j), 1);
            cc.set_diff(0, std::move(m));
            continue;
        }
        SparseZMat m(int(by_dim.at(d - 1).size()), int(ss.size()));
        for (size_t j = 0; j < ss.size(); ++j) {
            const auto& s = ss[j];
            for (size_t i = 0; i < s.size(); ++i) {
                std::vector<int> f;
                for (size_t t = 0; t < s.size(); ++t)
                    if (t != i) f.push_back(s[t]);
                auto it = index.at(d - 1).find(f);
                if (it == index.at(d - 1).end())
                    throw std::invalid_argument("complex not closed under faces");
                m.add(it->second, int(j), i % 2 == 0 ? 1 : -1);
            }
        }
        cc.set_diff(d, std::move(m));
    }
    return cc;
}

PointedSSetLevels sset_of_complex(const SimplicialComplex& k, int pointed_vertex) {
    struct State {
        SimplicialComplex k;
        int pv;
        std::map<int, std::vector<std::vector<int>>> tuples;          // degree -> tuples
        std::map<int, std::map<std::vector<int>, long>> tuple_index;  // degree -> lookup
    };
    auto st = std::make_shared<State>();
    st->k = k;
    st->pv = pointed_vertex;
    auto ensure = [st](int d) -> const std::vector<std::vector<int>>& {
        auto it = st->tuples.find(d);
        if (it != st->tuples.end()) return it->second;
        std::vector<std::vector<int>> out;
        std::vector<int> cur;
        std::function<void(int)> rec = [&](int lo) {
            if (int(cur.size()) == d + 1) {
                std::vector<int> support = cur;
                support.erase(std::unique(support.begin(), support.end()), support.end());
                if (!st->k.has(support)) return;
                if (st->pv >= 0 && support.size() == 1 && support[0] == st->pv) return;
                out.push_back(cur);
                return;
            }
            for (int v = lo; v < st->k.vertex_count; ++v) {
                cur.push_back(v);
                rec(v);
                cur.pop_back();
            }
        };
        rec(0);
        auto& slot = st->tuples[d];
        slot = std::move(out);
        auto& idx = st->tuple_index[d];
        for (long i = 0; i < long(slot.size()); ++i) idx[slot[size_t(i)]] = i;
        return slot;
    };
    auto lookup = [st, ensure](int d, const std::vector<int>& t) -> long {
        ensure(d);
        auto& idx = st->tuple_index.at(d);
        auto it = idx.find(t);
        return it == idx.end() ? -1 : it->second;
    };
    PointedSSetLevels x;
    x.arity = 1;
    x.level = [ensure](const std::vector<int>& p) {
        std::vector<std::string> labels;
        for (const auto& t : ensure(p[0])) labels.push_back(join_ints(t, ','));
        return labels;
    };
    x.face = [st, ensure, lookup](const std::vector<int>& p, long e, int, int i) -> long {
        auto t = ensure(p[0])[size_t(e)];
        t.erase(t.begin() + i);
        return lookup(p[0] - 1, t);
    };
    x.degeneracy = [st, ensure, lookup](const std::vector<int>& p, long e, int, int i) -> long {
        auto t = ensure(p[0])[size_t(e)];
        t.insert(t.begin() + i, t[size_t(i)]);
        return lookup(p[0] + 1, t);
    };
    return x;
}

}  // namespace stmod
