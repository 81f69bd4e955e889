#include "stmod/equivariant.hpp"

#include <algorithm>
#include <memory>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <utility>

namespace stmod {

namespace {

std::string matrix_key(const RMat& m) {
    std::string s;
    s.push_back(char(m.rows));
    s.append(m.a.begin(), m.a.end());
    return s;
}

void enumerate_group(GroupData& g, long cap) {
    if (g.order > cap) throw cap_exceeded_error("group enumeration cap");
    std::vector<RMat> els{RMat::identity(*g.R, g.n)};
    std::unordered_map<std::string, long> seen{{matrix_key(els[0]), 0}};
    for (size_t at = 0; at < els.size(); ++at) {
        RMat cur = els[at];
        for (const RMat& gen : g.generators) {
            RMat nx = gen.mul(cur);
            std::string key = matrix_key(nx);
            if (seen.emplace(std::move(key), long(els.size())).second) els.push_back(std::move(nx));
        }
        if (long(els.size()) > cap) throw cap_exceeded_error("group enumeration cap");
    }
    if (g.order != long(els.size()))
        throw internal_invariant_error("generator closure does not match the group order");
    g.elements = std::move(els);
}

}  // namespace

GroupData gl_group(int q, int n, bool enumerate, long cap) {
    if (n < 1) throw std::invalid_argument("gl_group needs n >= 1");
    const CoeffRing& R = ring_from_descriptor("Fq:" + std::to_string(q));
    GroupData g;
    g.q = q;
    g.n = n;
    g.R = &R;
    g.generators = gl_generators(R, n);
    g.order = 1;
    long qn = ipow(q, n);
    for (int i = 0; i < n; ++i) g.order *= Int(qn - ipow(q, i));
    if (enumerate) enumerate_group(g, cap);
    return g;
}

GroupData monomial_group(int q, int n, bool enumerate, long cap) {
    if (n < 1) throw std::invalid_argument("monomial_group needs n >= 1");
    const CoeffRing& R = ring_from_descriptor("Fq:" + std::to_string(q));
    GroupData g;
    g.q = q;
    g.n = n;
    g.R = &R;
    for (int i = 0; i + 1 < n; ++i) {
        RMat t = RMat::identity(R, n);
        t.at(i, i) = 0;
        t.at(i + 1, i + 1) = 0;
        t.at(i, i + 1) = 1;
        t.at(i + 1, i) = 1;
        g.generators.push_back(std::move(t));
    }
    for (uint8_t u : R.units) {
        if (u == R.one()) continue;
        RMat d = RMat::identity(R, n);
        d.at(0, 0) = u;
        g.generators.push_back(std::move(d));
    }
    g.order = factorial(n);
    for (int i = 0; i < n; ++i) g.order *= Int(long(R.units.size()));
    if (enumerate) enumerate_group(g, cap);
    return g;
}

GroupData trivial_group(int q, int n) {
    if (n < 1) throw std::invalid_argument("trivial_group needs n >= 1");
    const CoeffRing& R = ring_from_descriptor("Fq:" + std::to_string(q));
    GroupData g;
    g.q = q;
    g.n = n;
    g.R = &R;
    g.order = 1;
    g.elements = {RMat::identity(R, n)};
    return g;
}

GroupData local_gl_group(const CoeffRing& R, int n, bool enumerate, long cap) {
    if (n < 1) throw std::invalid_argument("local_gl_group needs n >= 1");
    GroupData g;
    g.q = R.size;
    g.n = n;
    g.R = &R;
    g.order = 1;
    if (R.is_field()) {
        g.generators = gl_generators(R, n);
        long qn = ipow(R.size, n);
        for (int i = 0; i < n; ++i) g.order *= Int(qn - ipow(R.size, i));
    } else {
        for (int i = 0; i + 1 < n; ++i)
            for (uint8_t alpha : R.units) {
                RMat up = RMat::identity(R, n);
                up.at(i, i + 1) = alpha;
                g.generators.push_back(std::move(up));
                RMat down = RMat::identity(R, n);
                down.at(i + 1, i) = alpha;
                g.generators.push_back(std::move(down));
            }
        for (int i = 0; i + 1 < n; ++i) {
            RMat t = RMat::identity(R, n);
            t.at(i, i) = 0;
            t.at(i + 1, i + 1) = 0;
            t.at(i, i + 1) = 1;
            t.at(i + 1, i) = 1;
            g.generators.push_back(std::move(t));
        }
        for (uint8_t u : R.units) {
            if (u == R.one()) continue;
            RMat d = RMat::identity(R, n);
            d.at(0, 0) = u;
            g.generators.push_back(std::move(d));
        }
        // reduction to the residue field is onto with kernel of size p^(n^2)
        // per nilpotency step
        Int p(long(R.p));
        for (int i = 0; i < (R.e - 1) * n * n; ++i) g.order *= p;
        Int pn = 1;
        for (int i = 0; i < n; ++i) pn *= p;
        Int pi = 1;
        for (int i = 0; i < n; ++i) {
            g.order *= pn - pi;
            pi *= p;
        }
    }
    if (enumerate) enumerate_group(g, cap);
    return g;
}

void verify_equivariance(const EquivariantComplex& x) {
    for (const RMat& g : x.group.generators) {
        for (const auto& [d, m] : x.cc.diff) {
            if (m.cols == 0) continue;
            SparseZMat cols = m.transpose();  // row e of cols = boundary of basis element e
            for (long e = 0; e < m.cols; ++e) {
                auto [ie, se] = x.act(g, d, e);
                std::map<long, Int> lhs, rhs;
                for (const auto& [r, v] : cols.data[size_t(ie)]) lhs[r] += se * v;
                for (const auto& [r, v] : cols.data[size_t(e)]) {
                    auto [ir, sr] = x.act(g, d - 1, r);
                    rhs[ir] += sr * v;
                }
                for (auto it = rhs.begin(); it != rhs.end();)
                    it = it->second == 0 ? rhs.erase(it) : std::next(it);
                for (auto it = lhs.begin(); it != lhs.end();)
                    it = it->second == 0 ? lhs.erase(it) : std::next(it);
                if (lhs != rhs)
                    throw internal_invariant_error(
                        "group action does not commute with the differential at degree " +
                        std::to_string(d));
            }
        }
    }
}

namespace {

template <class Grid>
std::vector<Grid> model_level(const CoeffRing& R, int n, int k, const std::vector<int>& p,
                              long cap) {
    if constexpr (std::is_same_v<Grid, SplitGrid>)
        return split_dk_level(R, n, k, p, cap);
    else
        return dk_level(R, n, k, p, cap);
}

template <class Grid>
Grid apply_pool_perm(const Grid& x, const std::vector<int>& perm) {
    Grid out = x;
    if constexpr (std::is_same_v<Grid, SplitGrid>) {
        for (int& id : out.parts) id = perm[size_t(id)];
    } else {
        for (int& id : out.cells) id = perm[size_t(id)];
    }
    return out;
}

struct Slot {
    long offset = 0;
    std::vector<long> basis;  // level indices of the nondegenerate elements
    std::vector<long> pos;    // level index -> basis position, -1 on degenerates
};

template <class Grid>
struct ModelState {
    const CoeffRing* R = nullptr;
    int n = 0;
    PointedSSetLevels sset;
    std::map<std::vector<int>, std::vector<Grid>> levels;
    std::map<std::vector<int>, Slot> slots;
    std::map<int, std::vector<std::vector<int>>> deg_ps;  // multidegrees, lex ascending
    std::map<std::string, std::vector<int>> pool_perm;    // matrix key -> pool permutation
};

template <class Grid>
EquivariantComplex build_equivariant(const GroupData& g, int k, int max_total_deg, long cap,
                                     bool split_model) {
    if (g.R == nullptr || g.n < 1) throw std::invalid_argument("group data incomplete");
    if (k < 1) throw std::invalid_argument("arity must be positive");
    const CoeffRing& R = *g.R;
    for (const RMat& m : g.generators) {
        bool ok = m.rows == g.n && m.cols == g.n;
        if (ok) {
            auto vals = local_smith(m);
            ok = int(vals.size()) == g.n;
            for (int v : vals) ok = ok && v == 0;
        }
        if (!ok) throw std::invalid_argument("group elements must be invertible n x n matrices");
    }

    auto st = std::make_shared<ModelState<Grid>>();
    st->R = &R;
    st->n = g.n;
    st->sset = split_model ? split_dk_sset(R, g.n, k, cap) : dk_sset(R, g.n, k, cap);

    // multidegrees with |p| <= max_total_deg, bucketed by total, lex ascending
    std::vector<std::vector<int>> all{std::vector<int>(size_t(k), 0)};
    for (int dir = 0; dir < k; ++dir) {
        std::vector<std::vector<int>> next;
        for (const auto& p : all) {
            int used = 0;
            for (int v : p) used += v;
            for (int v = 0; used + v <= max_total_deg; ++v) {
                auto e = p;
                e[size_t(dir)] = v;
                next.push_back(std::move(e));
            }
        }
        all = std::move(next);
    }
    std::sort(all.begin(), all.end());
    for (const auto& p : all) {
        int total = 0;
        for (int v : p) total += v;
        st->deg_ps[total].push_back(p);
    }

    ChainComplex cc = multitotal_chains(st->sset, max_total_deg);
    for (const auto& [d, ps] : st->deg_ps) {
        long off = 0;
        for (const auto& p : ps) {
            auto level = model_level<Grid>(R, g.n, k, p, cap);
            Slot s;
            s.offset = off;
            s.pos.assign(level.size(), -1);
            for (long e = 0; e < long(level.size()); ++e) {
                if (is_degenerate(st->sset, p, e)) continue;
                s.pos[size_t(e)] = long(s.basis.size());
                s.basis.push_back(e);
            }
            off += long(s.basis.size());
            st->slots[p] = std::move(s);
            st->levels[p] = std::move(level);
        }
        if (off != cc.dim(d)) throw internal_invariant_error("chain basis does not match levels");
    }

    EquivariantComplex x;
    x.cc = std::move(cc);
    x.group = g;
    x.act = [st](const RMat& m, int d, long idx) -> std::pair<long, int> {
        std::string key = matrix_key(m);
        auto pit = st->pool_perm.find(key);
        if (pit == st->pool_perm.end()) {
            const SubspacePool& pool = submodule_pool(*st->R, st->n);
            std::vector<int> perm(pool.subs.size());
            for (size_t i = 0; i < pool.subs.size(); ++i)
                perm[i] = pool.find(transform(m, pool.subs[i]));
            pit = st->pool_perm.emplace(std::move(key), std::move(perm)).first;
        }
        auto dit = st->deg_ps.find(d);
        if (dit == st->deg_ps.end()) throw std::invalid_argument("degree out of range");
        for (const auto& p : dit->second) {
            const Slot& s = st->slots.at(p);
            if (idx >= s.offset + long(s.basis.size())) continue;
            const auto& level = st->levels.at(p);
            Grid moved =
                apply_pool_perm(level[size_t(s.basis[size_t(idx - s.offset)])], pit->second);
            long li = level_index(level, moved);
            if (li < 0 || s.pos[size_t(li)] < 0)
                throw internal_invariant_error("action left the nondegenerate basis");
            return {s.offset + s.pos[size_t(li)], 1};
        }
        throw std::invalid_argument("basis index out of range");
    };
    verify_equivariance(x);
    return x;
}

}  // namespace

EquivariantComplex dk_equivariant_complex(const GroupData& g, int k, int max_total_deg, long cap) {
    return build_equivariant<LatticeGrid>(g, k, max_total_deg, cap, false);
}

EquivariantComplex split_dk_equivariant_complex(const GroupData& g, int k, int max_total_deg,
                                                long cap) {
    return build_equivariant<SplitGrid>(g, k, max_total_deg, cap, true);
}

namespace {

bool order_invertible(const GroupData& g, Coeffs c) {
    if (c.kind == Coeffs::Kind::rational) return true;
    if (c.kind != Coeffs::Kind::mod_p) return false;
    return mpz_divisible_ui_p(g.order.get_mpz_t(), static_cast<unsigned long>(c.p)) == 0;
}

// Coinvariants of homology: dim ker d - rank [im d_{d+1} | (g - 1) ker d].
AbGroup transfer_degree(const EquivariantComplex& x, Coeffs c, int d) {
    long dim = x.cc.dim(d);
    if (dim == 0) return {};
    const SparseZMat* down = x.cc.differential(d);
    const SparseZMat* up = x.cc.differential(d + 1);
    std::vector<std::vector<Int>> K;
    if (down) {
        K = c.kind == Coeffs::Kind::rational ? kernel_basis(*down) : kernel_basis_mod(*down, c.p);
    } else {
        for (long j = 0; j < dim; ++j) {
            std::vector<Int> e(size_t(dim), 0);
            e[size_t(j)] = 1;
            K.push_back(std::move(e));
        }
    }
    long z = long(K.size());
    SparseZMat m(int(dim), int((up ? long(up->cols) : 0) + long(x.group.generators.size()) * z));
    int col = 0;
    if (up) {
        for (int i = 0; i < up->rows; ++i)
            for (const auto& [j, v] : up->data[size_t(i)]) m.add(i, j, v);
        col = up->cols;
    }
    for (const RMat& g : x.group.generators) {
        std::vector<std::pair<long, int>> act(static_cast<size_t>(dim));
        for (long i = 0; i < dim; ++i) act[size_t(i)] = x.act(g, d, i);
        for (const auto& v : K) {
            for (long i = 0; i < dim; ++i) {
                if (v[size_t(i)] == 0) continue;
                m.add(int(act[size_t(i)].first), col, act[size_t(i)].second * v[size_t(i)]);
                m.add(int(i), col, -v[size_t(i)]);
            }
            ++col;
        }
    }
    long r = c.kind == Coeffs::Kind::rational ? smith(m, false).rank() : rank_mod(m, c.p);
    return {z - r, {}};
}

std::vector<long> word_digits(long w, int len, long base) {
    std::vector<long> out(static_cast<size_t>(len));
    for (int t = len - 1; t >= 0; --t) {
        out[size_t(t)] = w % base + 1;  // element indices, identity excluded
        w /= base;
    }
    return out;
}

long word_index(const std::vector<long>& els, long base) {
    long w = 0;
    for (long e : els) w = w * base + (e - 1);
    return w;
}

std::map<int, AbGroup> borel_orbit(const EquivariantComplex& x, Coeffs c, int max_deg) {
    if (!x.group.enumerated())
        throw std::invalid_argument("bar backend needs the enumerated group");
    const auto& els = x.group.elements;
    long nel = long(els.size());
    if (!(els[0] == RMat::identity(*x.group.R, x.group.n)))
        throw internal_invariant_error("enumerated group does not start at the identity");
    long base = nel - 1;
    long words = 1;
    for (int t = 1; t <= max_deg; ++t) {
        words *= base;
        if (words > 200000) throw cap_exceeded_error("bar resolution cap");
    }

    std::unordered_map<std::string, long> index;
    for (long i = 0; i < nel; ++i) index[matrix_key(els[size_t(i)])] = i;
    std::vector<std::vector<long>> mult(static_cast<size_t>(nel), std::vector<long>(static_cast<size_t>(nel)));
    std::vector<long> inv(static_cast<size_t>(nel), -1);
    for (long i = 0; i < nel; ++i)
        for (long j = 0; j < nel; ++j) {
            long p = index.at(matrix_key(els[size_t(i)].mul(els[size_t(j)])));
            mult[size_t(i)][size_t(j)] = p;
            if (p == 0) inv[size_t(i)] = j;
        }

    std::map<std::pair<long, int>, std::vector<std::pair<long, int>>> act_cache;
    auto act_of = [&](long e, int d) -> const std::vector<std::pair<long, int>>& {
        auto it = act_cache.find({e, d});
        if (it == act_cache.end()) {
            std::vector<std::pair<long, int>> a(size_t(x.cc.dim(d)));
            for (long i = 0; i < long(a.size()); ++i) a[size_t(i)] = x.act(els[size_t(e)], d, i);
            it = act_cache.emplace(std::pair<long, int>{e, d}, std::move(a)).first;
        }
        return it->second;
    };

    std::map<int, long> wcount{{0, 1}};
    for (int t = 1; t <= max_deg; ++t) wcount[t] = wcount[t - 1] * base;

    Bicomplex bc;
    for (const auto& [p, lab] : x.cc.labels) {
        if (lab.empty()) continue;
        for (int wq = 0; wq <= max_deg - std::max(p, 0); ++wq) {
            long wn = wcount.at(wq);
            if (wn == 0 || p + wq > max_deg) continue;
            std::vector<std::string> block;
            block.reserve(size_t(long(lab.size()) * wn));
            for (const auto& s : lab)
                for (long w = 0; w < wn; ++w) block.push_back(s + "|w" + std::to_string(w));
            bc.labels[{p, wq}] = std::move(block);
        }
    }
    for (const auto& [pq, lab] : bc.labels) {
        auto [p, wq] = pq;
        long wn = wcount.at(wq);
        long cells = x.cc.dim(p);
        if (const SparseZMat* dp = x.cc.differential(p); dp && bc.labels.count({p - 1, wq})) {
            SparseZMat dh(int(long(dp->rows) * wn), int(long(cells) * wn));
            for (int i = 0; i < dp->rows; ++i)
                for (const auto& [j, v] : dp->data[size_t(i)])
                    for (long w = 0; w < wn; ++w)
                        dh.add(int(long(i) * wn + w), int(long(j) * wn + w), v);
            bc.dh[pq] = std::move(dh);
        }
        if (wq >= 1) {
            long wprev = wcount.at(wq - 1);
            SparseZMat dv(int(cells * wprev), int(cells * wn));
            for (long w = 0; w < wn; ++w) {
                auto digits = word_digits(w, wq, base);
                std::vector<long> rest(digits.begin() + 1, digits.end());
                long head_word = word_index(rest, base);
                const auto& headact = act_of(inv[size_t(digits[0])], p);
                std::vector<long> trunc(digits.begin(), digits.end() - 1);
                long tail_word = word_index(trunc, base);
                int tail_sign = wq % 2 == 0 ? 1 : -1;
                for (long cidx = 0; cidx < cells; ++cidx) {
                    auto [ic, sc] = headact[size_t(cidx)];
                    dv.add(int(ic * wprev + head_word), int(cidx * wn + w), sc);
                    dv.add(int(cidx * wprev + tail_word), int(cidx * wn + w), tail_sign);
                }
                for (int i = 1; i < wq; ++i) {
                    long u = mult[size_t(digits[size_t(i - 1)])][size_t(digits[size_t(i)])];
                    if (u == 0) continue;  // normalized bar drops identity entries
                    std::vector<long> merged;
                    for (int t = 0; t < wq; ++t) {
                        if (t == i - 1) merged.push_back(u);
                        else if (t != i) merged.push_back(digits[size_t(t)]);
                    }
                    long mw = word_index(merged, base);
                    int sign = i % 2 == 0 ? 1 : -1;
                    for (long cidx = 0; cidx < cells; ++cidx)
                        dv.add(int(cidx * wprev + mw), int(cidx * wn + w), sign);
                }
            }
            bc.dv[pq] = std::move(dv);
        }
    }
    ChainComplex total = total_complex(bc);
    std::map<int, AbGroup> out;
    for (int d = 0; d < max_deg; ++d) out[d] = homology(total, d, c);
    return out;
}

}  // namespace

std::map<int, AbGroup> homotopy_orbit_homology(const EquivariantComplex& x, Coeffs coeffs,
                                               int max_deg, OrbitBackend backend) {
    if (max_deg < 0) throw std::invalid_argument("max_deg must be nonnegative");
    if (backend == OrbitBackend::transfer) {
        if (!order_invertible(x.group, coeffs))
            throw unsupported_operation_error(
                "transfer backend needs the group order invertible in the coefficients");
        std::map<int, AbGroup> out;
        for (int d = 0; d <= max_deg; ++d) out[d] = transfer_degree(x, coeffs, d);
        return out;
    }
    return borel_orbit(x, coeffs, max_deg);
}

std::map<int, AbGroup> ek_homology(int q, int n, int k, Coeffs coeffs, int max_d, long cap) {
    if (k < 1 || k > 2) throw std::invalid_argument("k must be 1 or 2");
    if (max_d < 0) throw std::invalid_argument("max_d must be nonnegative");
    GroupData g = gl_group(q, n, false);
    bool invertible = order_invertible(g, coeffs);
    if (!invertible) enumerate_group(g, 100000);
    EquivariantComplex x = split_dk_equivariant_complex(g, k, max_d + k + 1, cap);
    std::map<int, AbGroup> table;
    if (invertible) {
        auto h = homotopy_orbit_homology(x, coeffs, max_d + k, OrbitBackend::transfer);
        for (int d = 0; d <= max_d; ++d) table[d] = h.at(d + k);
    } else {
        auto h = homotopy_orbit_homology(x, coeffs, max_d + k + 1, OrbitBackend::borel);
        for (int d = 0; d <= max_d; ++d) table[d] = h.at(d + k);
    }
    return table;
}

SplitFlagReport split_vs_flag_compare(int q, int n, int k, int max_deg) {
    if (max_deg < 0) throw std::invalid_argument("max_deg must be nonnegative");
    GroupData g = gl_group(q, n, false);
    SplitFlagReport rep;
    rep.q = q;
    rep.n = n;
    rep.k = k;
    EquivariantComplex split = split_dk_equivariant_complex(g, k, max_deg + 1);
    EquivariantComplex flag = dk_equivariant_complex(g, k, max_deg + 1);
    rep.split_table = homotopy_orbit_homology(split, Coeffs::Q(), max_deg, OrbitBackend::transfer);
    rep.flag_table = homotopy_orbit_homology(flag, Coeffs::Q(), max_deg, OrbitBackend::transfer);
    rep.equal = rep.split_table == rep.flag_table;
    return rep;
}

}  // namespace stmod
