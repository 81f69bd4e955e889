#include "stmod/semilocal.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

#include "stmod/buildings.hpp"
#include "stmod/par.hpp"

namespace stmod {

namespace {

// Inverse of a square matrix over the local ring: U m V = I gives
// m^{-1} = V U.
RMat rmat_inverse(const RMat& m) {
    if (m.rows != m.cols) throw std::invalid_argument("rmat_inverse: matrix not square");
    RMat u, v;
    std::vector<int> vals = local_smith(m, &u, &v);
    bool ok = int(vals.size()) == m.rows;
    for (int k : vals) ok = ok && k == 0;
    if (!ok) throw std::invalid_argument("rmat_inverse: matrix not invertible");
    return v.mul(u);
}

bool rmat_invertible(const RMat& m) {
    if (m.rows != m.cols) return false;
    std::vector<int> vals = local_smith(m);
    if (int(vals.size()) != m.rows) return false;
    for (int k : vals)
        if (k != 0) return false;
    return true;
}

// x -> m x is injective iff the diagonal form has cols-many unit pivots.
bool eval_injective(const RMat& m) {
    std::vector<int> vals = local_smith(m);
    if (int(vals.size()) != m.cols) return false;
    for (int k : vals)
        if (k != 0) return false;
    return true;
}

std::string join_multidegree(const std::vector<int>& p) {
    std::string s;
    for (size_t i = 0; i < p.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(p[size_t(i)]);
    }
    return s;
}

// 1 < t1 | t2 | ... from an arbitrary multiset of torsion orders.
std::vector<Int> normalize_torsion(std::vector<Int> t) {
    auto drop_units = [](std::vector<Int>& v) {
        v.erase(std::remove_if(v.begin(), v.end(), [](const Int& x) { return x <= 1; }), v.end());
    };
    drop_units(t);
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < t.size(); ++i)
            for (size_t j = i + 1; j < t.size(); ++j) {
                if (t[j] % t[i] == 0) continue;
                Int g = gcd(t[i], t[j]);
                Int l = t[i] / g * t[j];
                t[i] = g;
                t[j] = l;
                changed = true;
            }
    }
    drop_units(t);
    std::sort(t.begin(), t.end());
    return t;
}

}  // namespace

RMat FunctionalTuple::matrix() const {
    RMat m(*R, size(), ambient);
    for (int i = 0; i < size(); ++i)
        for (int j = 0; j < ambient; ++j) m.at(i, j) = rows[size_t(i)][size_t(j)];
    return m;
}

bool FunctionalTuple::all_surjective() const {
    for (const auto& r : rows) {
        bool unit = false;
        for (uint8_t x : r) unit = unit || R->is_unit(x);
        if (!unit) return false;
    }
    return true;
}

std::string FunctionalTuple::label() const {
    std::string out;
    for (int i = 0; i < size(); ++i) {
        if (i) out += ';';
        out += '(';
        for (int j = 0; j < ambient; ++j) {
            if (j) out += ',';
            out += R->elem_name(rows[size_t(i)][size_t(j)]);
        }
        out += ')';
    }
    return out;
}

FunctionalTuple make_tuple(const CoeffRing& R, int ambient,
                           const std::vector<std::vector<int>>& rows) {
    if (ambient < 1) throw std::invalid_argument("make_tuple: ambient rank must be positive");
    FunctionalTuple t;
    t.R = &R;
    t.ambient = ambient;
    for (const auto& r : rows) {
        if (int(r.size()) != ambient) throw std::invalid_argument("make_tuple: row length mismatch");
        std::vector<uint8_t> row;
        row.reserve(r.size());
        for (int x : r) {
            if (x < 0 || x >= R.size)
                throw std::invalid_argument("make_tuple: element id out of range");
            row.push_back(uint8_t(x));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

FunctionalTuple tuple_of_matrix(const RMat& m) {
    FunctionalTuple t;
    t.R = m.R;
    t.ambient = m.cols;
    for (int i = 0; i < m.rows; ++i) {
        std::vector<uint8_t> row(size_t(m.cols));
        for (int j = 0; j < m.cols; ++j) row[size_t(j)] = m.at(i, j);
        t.rows.push_back(std::move(row));
    }
    return t;
}

FunctionalTuple identity_tuple(const CoeffRing& R, int n) {
    return tuple_of_matrix(RMat::identity(R, n));
}

bool intersects_cleanly(const FunctionalTuple& sigma) {
    if (sigma.rows.empty()) return true;
    return cokernel_projective_rank(sigma.matrix()).has_value();
}

EComplexes e_complexes(const CoeffRing& R, int n, int vertex_cap) {
    if (n < 1) throw std::invalid_argument("e_complexes: rank must be positive");
    EComplexes out;
    long total = 1;
    for (int i = 0; i < n; ++i) total *= R.size;
    for (long code = 1; code < total; ++code) {
        std::vector<uint8_t> v = decode_vector(R, n, code);
        bool surj = false;
        for (uint8_t x : v) surj = surj || R.is_unit(x);
        if (!surj) continue;
        FunctionalTuple t;
        t.R = &R;
        t.ambient = n;
        t.rows.push_back(std::move(v));
        out.vertices.push_back(std::move(t));
    }
    const int V = int(out.vertices.size());
    if (V > vertex_cap) throw cap_exceeded_error("e_complexes: vertex count exceeds cap");

    const size_t nmask = size_t(1) << V;
    std::vector<uint8_t> clean(nmask, 0);
    par::for_index(nmask, [&](size_t mask) {
        FunctionalTuple t;
        t.R = &R;
        t.ambient = n;
        for (int i = 0; i < V; ++i)
            if (mask >> i & 1) t.rows.push_back(out.vertices[size_t(i)].rows[0]);
        clean[mask] = intersects_cleanly(t) ? 1 : 0;
    });

    // hereditary closure: facets are numerically smaller, so one ascending pass
    std::vector<uint8_t> ok = clean;
    for (size_t mask = 1; mask < nmask; ++mask) {
        if (!ok[mask]) continue;
        for (int i = 0; i < V && ok[mask]; ++i)
            if (mask >> i & 1) ok[mask] = ok[mask ^ (size_t(1) << i)];
    }

    out.E.vertex_count = V;
    out.E0.vertex_count = V;
    for (const auto& t : out.vertices) {
        out.E.vertex_labels.push_back(t.label());
        out.E0.vertex_labels.push_back(t.label());
    }
    for (size_t mask = 1; mask < nmask; ++mask) {
        if (!ok[mask]) continue;
        std::vector<int> s;
        FunctionalTuple t;
        t.R = &R;
        t.ambient = n;
        for (int i = 0; i < V; ++i)
            if (mask >> i & 1) {
                s.push_back(i);
                t.rows.push_back(out.vertices[size_t(i)].rows[0]);
            }
        out.E.simplices.insert(s);
        if (!eval_injective(t.matrix())) out.E0.simplices.insert(std::move(s));
    }
    out.full_simplex = ok[nmask - 1];
    return out;
}

ChainComplex relative_complex_chains(const SimplicialComplex& E, const SimplicialComplex& E0) {
    std::map<int, std::vector<std::vector<int>>> by_dim;
    for (const auto& s : E.simplices)
        if (!E0.has(s)) by_dim[int(s.size()) - 1].push_back(s);
    std::map<int, std::map<std::vector<int>, int>> index;
    auto vlabel = [&](int v) {
        return v < int(E.vertex_labels.size()) ? E.vertex_labels[size_t(v)]
                                               : "v" + std::to_string(v);
    };
    ChainComplex cc;
    for (const auto& [d, ss] : by_dim) {
        std::vector<std::string> lab;
        for (const auto& s : ss) {
            index[d][s] = int(lab.size());
            std::string l;
            for (size_t i = 0; i < s.size(); ++i) l += (i ? "." : "") + vlabel(s[size_t(i)]);
            lab.push_back(std::move(l));
        }
        cc.set_labels(d, std::move(lab));
    }
    for (const auto& [d, ss] : by_dim) {
        if (d == 0 || !by_dim.count(d - 1)) continue;
        SparseZMat m(int(by_dim.at(d - 1).size()), int(ss.size()));
        for (size_t j = 0; j < ss.size(); ++j) {
            const auto& s = ss[j];
            for (size_t i = 0; i < s.size(); ++i) {
                std::vector<int> face;
                for (size_t t = 0; t < s.size(); ++t)
                    if (t != i) face.push_back(s[size_t(t)]);
                if (E0.has(face)) continue;
                auto it = index.at(d - 1).find(face);
                if (it == index.at(d - 1).end())
                    throw internal_invariant_error("relative face outside the complex");
                m.add(it->second, int(j), i % 2 == 0 ? 1 : -1);
            }
        }
        cc.set_diff(d, std::move(m));
    }
    cc.verify();
    return cc;
}

AbGroup kunneth_homology(const std::map<int, AbGroup>& ha, const std::map<int, AbGroup>& hb,
                         int m) {
    AbGroup out;
    std::vector<Int> tors;
    for (const auto& [p, A] : ha) {
        if (auto it = hb.find(m - p); it != hb.end()) {
            const AbGroup& B = it->second;
            out.free_rank += A.free_rank * B.free_rank;
            for (long i = 0; i < A.free_rank; ++i)
                for (const Int& tb : B.torsion) tors.push_back(tb);
            for (const Int& ta : A.torsion)
                for (long i = 0; i < B.free_rank; ++i) tors.push_back(ta);
            for (const Int& ta : A.torsion)
                for (const Int& tb : B.torsion) tors.push_back(gcd(ta, tb));
        }
        if (auto it = hb.find(m - 1 - p); it != hb.end())
            for (const Int& ta : A.torsion)
                for (const Int& tb : it->second.torsion) tors.push_back(gcd(ta, tb));
    }
    out.torsion = normalize_torsion(std::move(tors));
    return out;
}

json ResolutionReport::to_json() const {
    json rs = json::object(), bs = json::object();
    for (const auto& [m, g] : resolution_side) rs[std::to_string(m)] = g.to_json();
    for (const auto& [m, g] : building_side) bs[std::to_string(m)] = g.to_json();
    return json{{"q", q},
                {"n", n},
                {"which", which},
                {"resolution_side", rs},
                {"building_side", bs},
                {"equal", equal}};
}

ResolutionReport st_resolution_check(int q, int n, int which) {
    if (which != 1 && which != 2)
        throw std::invalid_argument("st_resolution_check: which must be 1 or 2");
    const bool ok1 = which == 1 && ((q == 2 && n >= 2 && n <= 4) || (q == 3 && n == 2));
    const bool ok2 = which == 2 && (q == 2 || q == 3) && n == 2;
    if (!ok1 && !ok2)
        throw cap_exceeded_error("st_resolution_check: instance outside the supported table");

    const CoeffRing& R = ring_from_descriptor("F" + std::to_string(q));
    ResolutionReport rep;
    rep.q = q;
    rep.n = n;
    rep.which = which;

    EComplexes ec = e_complexes(R, n);
    if (!ec.full_simplex)
        throw internal_invariant_error("E over a field is not the full simplex");

    int res_top = 0;
    std::map<int, AbGroup> res;
    if (which == 1 && int(ec.vertices.size()) > 12) {
        // E is a cone, so relative homology is the shifted reduced homology of
        // the subcomplex; this avoids the huge relative chain groups.
        ChainComplex c0 = complex_chains(ec.E0, true);
        res_top = ec.E0.dimension() + 3;
        for (int m = 0; m <= res_top; ++m) res[m] = homology(c0, m - 2);
    } else {
        ChainComplex rel = relative_complex_chains(ec.E, ec.E0);
        const int rtop = rel.labels.empty() ? -1 : rel.max_degree();
        if (which == 1) {
            res_top = rtop + 2;
            for (int m = 0; m <= res_top; ++m) res[m] = homology(rel, m - 1);
        } else {
            std::map<int, AbGroup> h;
            for (int p = 0; p <= rtop; ++p) h[p] = homology(rel, p);
            res_top = 2 * rtop + 3;
            for (int m = 0; m <= res_top; ++m) res[m] = kunneth_homology(h, h, m - 2);
        }
    }
    rep.resolution_side = std::move(res);

    PointedSSetLevels x = dk_sset(R, n, which);
    const int btop = (which == 1 ? n : 2 * n) + 1;
    ChainComplex bc = which == 1 ? normalized_chains(x, btop) : multitotal_chains(x, btop);
    const int top = std::max(res_top, btop);
    for (int m = 0; m <= top; ++m) rep.building_side[m] = homology(bc, m);

    rep.equal = true;
    for (int m = 0; m <= top; ++m) {
        auto ra = rep.resolution_side.find(m);
        auto rb = rep.building_side.find(m);
        AbGroup a = ra == rep.resolution_side.end() ? AbGroup{} : ra->second;
        AbGroup b = rb == rep.building_side.end() ? AbGroup{} : rb->second;
        if (!(a == b)) rep.equal = false;
    }
    return rep;
}

bool symbol_defined(const FunctionalTuple& fprime, const FunctionalTuple& f) {
    if (fprime.R == nullptr || fprime.R != f.R || fprime.ambient != f.ambient)
        throw std::invalid_argument("symbol_defined: tuples over different duals");
    const CoeffRing& R = *f.R;
    const int n = f.ambient;
    if (fprime.size() != n || f.size() != n)
        throw std::invalid_argument("symbol_defined: need ambient-many functionals per tuple");
    for (const FunctionalTuple* t : {&fprime, &f}) {
        std::set<std::vector<uint8_t>> s(t->rows.begin(), t->rows.end());
        if (int(s.size()) != n) return false;  // repeated functional: not a simplex
    }
    if (!fprime.all_surjective() || !f.all_surjective()) return false;
    std::set<std::vector<uint8_t>> uni(fprime.rows.begin(), fprime.rows.end());
    uni.insert(f.rows.begin(), f.rows.end());
    std::vector<std::vector<uint8_t>> rows(uni.begin(), uni.end());
    const int m = int(rows.size());
    if (m > 16) throw cap_exceeded_error("symbol_defined: union above subset cap");
    for (long mask = 1; mask < (long(1) << m); ++mask) {
        FunctionalTuple sub;
        sub.R = &R;
        sub.ambient = n;
        for (int i = 0; i < m; ++i)
            if (mask >> i & 1) sub.rows.push_back(rows[size_t(i)]);
        if (!intersects_cleanly(sub)) return false;
    }
    // A defined symbol against an invertible frame has change-of-frame entries
    // in {0} or the units.
    RMat fp = fprime.matrix();
    if (rmat_invertible(fp)) {
        RMat psi = f.matrix().mul(rmat_inverse(fp));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                uint8_t v = psi.at(i, j);
                if (v != 0 && !R.is_unit(v))
                    throw internal_invariant_error("defined symbol with a non-unit mixed entry");
            }
    }
    return true;
}

std::array<RMat, 2> row_addition_terms(const RMat& psi, int s, int t) {
    if (psi.rows != psi.cols) throw std::invalid_argument("row_addition_terms: matrix not square");
    if (s == t || s < 0 || t < 0 || s >= psi.rows || t >= psi.rows)
        throw std::invalid_argument("row_addition_terms: bad row pair");
    const CoeffRing& R = *psi.R;
    RMat a = psi, b = psi;
    for (int j = 0; j < psi.cols; ++j) {
        uint8_t sum = uint8_t(R.add(psi.at(s, j), psi.at(t, j)));
        a.at(s, j) = sum;
        b.at(t, j) = sum;
    }
    FunctionalTuple id = identity_tuple(R, psi.cols);
    const RMat* candidates[3] = {&psi, &a, &b};
    for (const RMat* mm : candidates)
        if (!symbol_defined(id, tuple_of_matrix(*mm)))
            throw std::invalid_argument("row_addition_terms: inadmissible addition");
    return {a, b};
}

const LatticeGrid& GridBasis::grid_at(long i) const {
    const auto& [slot, li] = elements.at(size_t(i));
    return levels[size_t(slot)][size_t(li)];
}

const std::vector<int>& GridBasis::multidegree_at(long i) const {
    return multidegrees[size_t(elements.at(size_t(i)).first)];
}

long GridBasis::index_of(const std::vector<int>& p, const LatticeGrid& g) const {
    auto it = std::lower_bound(multidegrees.begin(), multidegrees.end(), p);
    if (it == multidegrees.end() || *it != p)
        throw std::invalid_argument("index_of: multidegree outside the basis");
    size_t slot = size_t(it - multidegrees.begin());
    long li = level_index(levels[slot], g);
    if (li < 0) throw internal_invariant_error("index_of: grid missing from its level");
    return flat[slot][size_t(li)];
}

void GridBasis::verify_against(const ChainComplex& cc) const {
    auto it = cc.labels.find(total);
    static const std::vector<std::string> none;
    const std::vector<std::string>& lab = it == cc.labels.end() ? none : it->second;
    if (long(lab.size()) != dim())
        throw internal_invariant_error("grid basis dimension mismatch");
    for (long i = 0; i < dim(); ++i) {
        const auto& [slot, li] = elements[size_t(i)];
        std::string want = join_multidegree(multidegrees[size_t(slot)]) + "|" +
                           levels[size_t(slot)][size_t(li)].label();
        if (want != lab[size_t(i)])
            throw internal_invariant_error("grid basis label mismatch");
    }
}

GridBasis grid_basis(const CoeffRing& R, int n, int k, int total, long cap) {
    if (n < 1 || k < 1 || total < 0) throw std::invalid_argument("grid_basis: bad parameters");
    GridBasis b;
    b.R = &R;
    b.n = n;
    b.k = k;
    b.total = total;
    b.sset = dk_sset(R, n, k, cap);
    std::vector<int> cur(size_t(k), 0);
    std::function<void(int, int)> gen = [&](int pos, int rem) {
        if (pos == k - 1) {
            cur[size_t(pos)] = rem;
            b.multidegrees.push_back(cur);
            return;
        }
        for (int v = 0; v <= rem; ++v) {
            cur[size_t(pos)] = v;
            gen(pos + 1, rem - v);
        }
    };
    gen(0, total);
    std::sort(b.multidegrees.begin(), b.multidegrees.end());
    for (size_t s = 0; s < b.multidegrees.size(); ++s) {
        const auto& p = b.multidegrees[s];
        std::vector<LatticeGrid> lev = dk_level(R, n, k, p, cap);
        std::vector<long> fl(lev.size(), -1);
        for (size_t e = 0; e < lev.size(); ++e) {
            if (is_degenerate(b.sset, p, long(e))) continue;
            fl[e] = long(b.elements.size());
            b.elements.push_back({int(s), long(e)});
        }
        b.levels.push_back(std::move(lev));
        b.flat.push_back(std::move(fl));
    }
    return b;
}

Chain symbol_cycle(const FunctionalTuple& fprime, const FunctionalTuple& f,
                   const GridBasis& basis) {
    if (basis.k != 2) throw std::invalid_argument("symbol_cycle: basis must be 2-fold");
    const CoeffRing& R = *basis.R;
    const int n = basis.n;
    if (fprime.R != &R || f.R != &R || fprime.ambient != n || f.ambient != n)
        throw std::invalid_argument("symbol_cycle: tuple does not match the basis");
    if (basis.total != 2 * n)
        throw std::invalid_argument("symbol_cycle: basis must sit in total degree 2n");
    if (!symbol_defined(fprime, f))
        throw std::invalid_argument("symbol_cycle: undefined symbol");
    Chain out;
    if (!rmat_invertible(fprime.matrix()) || !rmat_invertible(f.matrix())) return out;

    // column j of the inverse matrix is the frame vector dual to row j
    auto flag_family = [&](const RMat& m) {
        RMat inv = rmat_inverse(m);
        std::vector<std::vector<uint8_t>> cols(static_cast<size_t>(n),
                                               std::vector<uint8_t>(static_cast<size_t>(n)));
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) cols[size_t(j)][size_t(i)] = inv.at(i, j);
        std::vector<std::pair<int, LatticeGrid>> fam;
        std::vector<int> perm(static_cast<size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        do {
            std::vector<Subspace> chain{zero_subspace(R, n)};
            std::vector<std::vector<uint8_t>> acc;
            for (int a = 0; a < n; ++a) {
                acc.push_back(cols[size_t(perm[size_t(a)])]);
                chain.push_back(span_of(R, n, acc));
            }
            fam.push_back({perm_sign(perm), make_lattice_grid(R, n, {n}, chain)});
        } while (std::next_permutation(perm.begin(), perm.end()));
        return fam;
    };
    auto fu = flag_family(fprime.matrix());
    auto fw = flag_family(f.matrix());
    const std::vector<int> shape{n, n};
    for (const auto& [su, U] : fu)
        for (const auto& [sw, W] : fw) {
            LatticeGrid g = from_flags_by_intersection({U, W});
            if (!is_full(g) || !is_lattice(g))
                throw internal_invariant_error("symbol grid is not a full lattice");
            long idx = basis.index_of(shape, g);
            if (idx < 0) continue;
            Int& c = out[idx];
            c += su * sw;
            if (c == 0) out.erase(idx);
        }
    return out;
}

namespace {

SparseZMat matrix_of_columns(const std::vector<std::vector<Int>>& cols, long z) {
    SparseZMat m(int(z), int(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j)
        for (long i = 0; i < z; ++i)
            if (cols[j][size_t(i)] != 0) m.add(int(i), int(j), cols[j][size_t(i)]);
    return m;
}

struct CoinvData {
    PresentedCokernel pc;
    std::vector<std::vector<Int>> kernel;    // cycle vectors in the top degree
    std::vector<std::vector<Int>> rel_rows;  // relations in kernel coordinates
};

// Coinvariants of ker(d_deg) under the group, presented on the kernel basis
// by the boundary columns from degree deg+1 and the (g - 1) images.
CoinvData top_coinvariants(const EquivariantComplex& x, int deg, bool want_gen_images) {
    const ChainComplex& cc = x.cc;
    const long z = cc.dim(deg);
    std::vector<std::vector<Int>> K;
    if (const SparseZMat* dout = cc.differential(deg); dout && !dout->is_zero())
        K = kernel_basis(*dout);
    else {
        K.assign(size_t(z), {});
        for (long j = 0; j < z; ++j) {
            K[size_t(j)].assign(size_t(z), 0);
            K[size_t(j)][size_t(j)] = 1;
        }
    }
    const int r = int(K.size());
    LinearSolver solver(matrix_of_columns(K, z));
    std::vector<std::vector<Int>> rows;
    auto push_in_kernel_coords = [&](const std::vector<Int>& v) {
        auto sol = solver.solve(v);
        if (!sol) throw internal_invariant_error("relation escapes the cycle lattice");
        rows.push_back(std::move(*sol));
    };
    if (const SparseZMat* din = cc.differential(deg + 1); din && !din->is_zero()) {
        SparseZMat t = din->transpose();
        for (int j = 0; j < din->cols; ++j) {
            std::vector<Int> col(size_t(z), 0);
            for (const auto& [i, v] : t.data[size_t(j)]) col[size_t(i)] = v;
            push_in_kernel_coords(col);
        }
    }
    for (const RMat& g : x.group.generators)
        for (int j = 0; j < r; ++j) {
            std::vector<Int> w(size_t(z), 0);
            for (long i = 0; i < z; ++i) {
                const Int& c = K[size_t(j)][size_t(i)];
                if (c == 0) continue;
                auto [img, sign] = x.act(g, deg, i);
                if (img >= 0) w[size_t(img)] += sign > 0 ? c : Int(-c);
            }
            bool nonzero = false;
            for (long i = 0; i < z; ++i) {
                w[size_t(i)] -= K[size_t(j)][size_t(i)];
                nonzero = nonzero || w[size_t(i)] != 0;
            }
            if (nonzero) push_in_kernel_coords(w);
        }
    SparseZMat rels(int(rows.size()), r);
    for (size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < r; ++j)
            if (rows[i][size_t(j)] != 0) rels.add(int(i), j, rows[i][size_t(j)]);
    CoinvData out;
    out.pc = presentation_cokernel(r, rels, want_gen_images);
    out.kernel = std::move(K);
    out.rel_rows = std::move(rows);
    return out;
}

}  // namespace

json LocalSt2Report::to_json() const {
    json vals = json::array();
    for (const Int& v : reduction_values) vals.push_back(v.get_str());
    return json{{"ring", ring},
                {"rank", d},
                {"exploratory", exploratory},
                {"coinvariants", group.to_json()},
                {"residue_coinvariants", residue_group.to_json()},
                {"reduction_values", vals},
                {"surjective", surjective},
                {"iso", iso}};
}

LocalSt2Report st2_coinvariants_local(const CoeffRing& R, int d, bool allow_rank3) {
    if (R.is_field())
        throw std::invalid_argument("st2_coinvariants_local: ring must have a nonzero maximal ideal");
    if (d < 1 || d > 3) throw std::invalid_argument("st2_coinvariants_local: rank must be 1, 2, or 3");
    if (d == 3 && !allow_rank3) throw cap_exceeded_error("st2_coinvariants_local: rank 3 disabled");

    LocalSt2Report rep;
    rep.ring = R.name;
    rep.d = d;

    GroupData G = local_gl_group(R, d);
    EquivariantComplex X = dk_equivariant_complex(G, 2, 2 * d + 1);
    CoinvData over_r = top_coinvariants(X, 2 * d, false);
    rep.group = over_r.pc.group;

    const CoeffRing& F = ring_from_descriptor("F" + std::to_string(R.p));
    GroupData GF = gl_group(R.p, d, false);
    EquivariantComplex XF = dk_equivariant_complex(GF, 2, 2 * d + 1);
    CoinvData over_f = top_coinvariants(XF, 2 * d, true);
    rep.residue_group = over_f.pc.group;
    if (!over_f.pc.group.is_free_of_rank(1))
        throw internal_invariant_error("residue coinvariants are not infinite cyclic");

    GridBasis br = grid_basis(R, d, 2, 2 * d);
    GridBasis bf = grid_basis(F, d, 2, 2 * d);
    br.verify_against(X.cc);
    bf.verify_against(XF.cc);

    // cellwise residue reduction is a simplicial map, hence a chain map on the
    // normalized bases with degenerate images dropped
    const long zr = br.dim(), zf = bf.dim();
    SparseZMat red(static_cast<int>(zf), static_cast<int>(zr));
    for (long i = 0; i < zr; ++i) {
        const LatticeGrid& g = br.grid_at(i);
        const std::vector<int>& p = br.multidegree_at(i);
        std::vector<Subspace> cells;
        for (int c : g.cells) {
            const Subspace& s = g.pool->subs[size_t(c)];
            std::vector<std::vector<uint8_t>> gens;
            for (int a = 0; a < s.gens.rows; ++a) {
                std::vector<uint8_t> row(static_cast<size_t>(d));
                for (int b2 = 0; b2 < d; ++b2)
                    row[size_t(b2)] = uint8_t(F.lift_int(R.residue[s.gens.at(a, b2)]));
                gens.push_back(std::move(row));
            }
            cells.push_back(span_of(F, d, gens));
        }
        LatticeGrid gf = make_lattice_grid(F, d, g.shape, cells);
        if (!is_full(gf) || !is_lattice(gf))
            throw internal_invariant_error("residue reduction is not a lattice grid");
        long j = bf.index_of(p, gf);
        if (j >= 0) red.add(int(j), int(i), 1);
    }

    LinearSolver fsolver(matrix_of_columns(over_f.kernel, zf));
    const SparseZMat* df = XF.cc.differential(2 * d);
    for (const auto& kvec : over_r.kernel) {
        std::vector<Int> y = red.apply(kvec);
        if (df)
            for (const Int& v : df->apply(y))
                if (v != 0) throw internal_invariant_error("reduced cycle is not a cycle");
        auto coords = fsolver.solve(y);
        if (!coords) throw internal_invariant_error("reduced cycle escapes the cycle lattice");
        Int val = 0;
        for (size_t t = 0; t < coords->size(); ++t)
            val += (*coords)[t] * over_f.pc.gen_images[t][0];
        rep.reduction_values.push_back(val);
    }
    for (const auto& row : over_r.rel_rows) {
        Int acc = 0;
        for (size_t t = 0; t < row.size(); ++t) acc += row[t] * rep.reduction_values[t];
        if (acc != 0) throw internal_invariant_error("reduction does not kill a relation");
    }
    Int g = 0;
    for (const Int& v : rep.reduction_values) g = gcd(g, v);
    rep.surjective = g == 1;
    rep.iso = rep.surjective && rep.group.is_free_of_rank(1);
    return rep;
}

}  // namespace stmod
