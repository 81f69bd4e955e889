#include "stmod/steinberg.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <tuple>

namespace stmod {

namespace {

const CoeffRing& ring_for_q(int q) {
    return ring_from_descriptor("Fq:" + std::to_string(q));
}

SteinbergModule build_module(int q, int n) {
    if (n < 1) throw std::invalid_argument("steinberg_module: n must be positive");
    SteinbergModule m;
    m.q = q;
    m.n = n;
    m.R = &ring_for_q(q);
    const SubspacePool& pool = submodule_pool(*m.R, n);
    m.order_complex = tits(q, n);
    m.chains = complex_chains(m.order_complex, true);
    m.vertex_of_pool.assign(pool.subs.size(), -1);
    for (int id : pool.summands) {
        const Subspace& s = pool.subs[size_t(id)];
        if (s.is_zero() || s.is_full()) continue;
        m.vertex_of_pool[size_t(id)] = int(m.vertex_subspace.size());
        m.vertex_subspace.push_back(id);
    }
    if (n == 1) {
        m.flags.push_back({});
        m.flag_lookup[{}] = 0;
        m.kernel.push_back({Int(1)});
        return m;
    }
    for (const auto& s : m.order_complex.simplices)
        if (int(s.size()) == n - 1) {
            m.flag_lookup[s] = long(m.flags.size());
            m.flags.push_back(s);
        }
    const SparseZMat* top = m.chains.differential(m.top_degree());
    if (!top || top->cols != int(m.flags.size()))
        throw internal_invariant_error("top differential does not match the flag count");
    m.kernel = kernel_basis(*top);
    Int expect = 1;
    for (int i = 1; i < n; ++i) expect *= ipow(q, i);
    if (Int(long(m.kernel.size())) != expect)
        throw internal_invariant_error("steinberg rank mismatch");
    return m;
}

const SteinbergModule& module_of(const SteinbergClass& x) { return steinberg_module(x.q, x.n); }

void check_compatible(const SteinbergClass& x, const SteinbergClass& y) {
    if (x.q != y.q || x.n != y.n)
        throw std::invalid_argument("steinberg classes live over different spaces");
}

// Sign of the permutation sorting a list of distinct keys ascending.
int sort_sign(const std::vector<long>& keys) {
    std::vector<int> p(keys.size());
    std::iota(p.begin(), p.end(), 0);
    std::sort(p.begin(), p.end(), [&](int a, int b) { return keys[size_t(a)] < keys[size_t(b)]; });
    return perm_sign(p);
}

std::string matrix_key(const RMat& m) {
    std::string s;
    s.push_back(char(m.rows));
    s.append(m.a.begin(), m.a.end());
    return s;
}

}  // namespace

int SteinbergModule::flag_sign(long f) const {
    const auto& fl = flags.at(size_t(f));
    if (fl.size() < 2) return 1;
    const SubspacePool& pool = submodule_pool(*R, n);
    std::vector<long> sizes;
    for (int v : fl) sizes.push_back(pool.subs[size_t(vertex_subspace[size_t(v)])].size());
    return sort_sign(sizes);
}

long SteinbergModule::flag_index(const std::vector<int>& sorted_vertices) const {
    auto it = flag_lookup.find(sorted_vertices);
    return it == flag_lookup.end() ? -1 : it->second;
}

const SteinbergModule& steinberg_module(int q, int n) {
    static std::map<std::pair<int, int>, std::unique_ptr<SteinbergModule>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{q, n}];
    if (!slot) slot = std::make_unique<SteinbergModule>(build_module(q, n));
    return *slot;
}

bool SteinbergClass::is_zero() const {
    return std::all_of(coords.begin(), coords.end(), [](const Int& c) { return c == 0; });
}

SteinbergClass SteinbergClass::operator+(const SteinbergClass& o) const {
    check_compatible(*this, o);
    SteinbergClass out = *this;
    for (size_t i = 0; i < coords.size(); ++i) out.coords[i] += o.coords[i];
    return out;
}

SteinbergClass SteinbergClass::operator-(const SteinbergClass& o) const {
    check_compatible(*this, o);
    SteinbergClass out = *this;
    for (size_t i = 0; i < coords.size(); ++i) out.coords[i] -= o.coords[i];
    return out;
}

SteinbergClass SteinbergClass::operator*(const Int& c) const {
    SteinbergClass out = *this;
    for (auto& x : out.coords) x *= c;
    return out;
}

SteinbergClass st_zero(int q, int n) {
    const SteinbergModule& m = steinberg_module(q, n);
    return {q, n, std::vector<Int>(size_t(m.flag_count()), Int(0))};
}

bool st_is_cycle(const SteinbergClass& x) {
    const SteinbergModule& m = module_of(x);
    if (long(x.coords.size()) != m.flag_count())
        throw std::invalid_argument("coordinate length does not match the flag count");
    if (m.n == 1) return true;
    const SparseZMat* top = m.chains.differential(m.top_degree());
    std::vector<Int> img = top->apply(x.coords);
    return std::all_of(img.begin(), img.end(), [](const Int& c) { return c == 0; });
}

Int st_pairing(const SteinbergClass& x, const SteinbergClass& y) {
    check_compatible(x, y);
    if (x.coords.size() != y.coords.size())
        throw std::invalid_argument("coordinate lengths differ");
    Int acc = 0;
    for (size_t i = 0; i < x.coords.size(); ++i) acc += x.coords[i] * y.coords[i];
    return acc;
}

SteinbergClass st_apartment(const std::vector<Subspace>& lines) {
    if (lines.empty()) throw std::invalid_argument("apartment needs at least one line");
    const CoeffRing& R = *lines[0].R;
    if (!R.is_field()) throw unsupported_operation_error("steinberg classes require a field");
    int n = lines[0].ambient;
    if (int(lines.size()) != n) throw std::invalid_argument("need exactly ambient-rank lines");
    const SteinbergModule& m = steinberg_module(int(R.size), n);
    const SubspacePool& pool = submodule_pool(R, n);
    Subspace total = zero_subspace(R, n);
    for (const auto& l : lines) {
        if (l.ambient != n || l.R != &R) throw std::invalid_argument("mixed ambient spaces");
        if (l.size() != long(R.size)) throw std::invalid_argument("parts must be lines");
        if (subspace_intersect(total, l).size() != 1)
            throw std::invalid_argument("lines do not span directly");
        total = subspace_sum(total, l);
    }
    if (!total.is_full()) throw std::invalid_argument("lines do not span");

    SteinbergClass out = st_zero(int(R.size), n);
    std::vector<int> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    do {
        Subspace partial = zero_subspace(R, n);
        std::vector<int> verts;
        for (int t = 0; t + 1 < n; ++t) {
            partial = subspace_sum(partial, lines[size_t(perm[size_t(t)])]);
            int vid = m.vertex_of_pool[size_t(pool.find(partial))];
            if (vid < 0) throw internal_invariant_error("partial sum is not a complex vertex");
            verts.push_back(vid);
        }
        std::vector<long> keys(verts.begin(), verts.end());
        int orient = sort_sign(keys);
        std::sort(verts.begin(), verts.end());
        long f = m.flag_index(verts);
        if (f < 0) throw internal_invariant_error("flag missing from the order complex");
        std::vector<int> p(perm);
        out.coords[size_t(f)] += Int(perm_sign(p) * orient);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

SteinbergClass st_standard_apartment(int q, int n) {
    const CoeffRing& R = ring_for_q(q);
    std::vector<Subspace> lines;
    for (int i = 0; i < n; ++i) {
        std::vector<uint8_t> e(size_t(n), 0);
        e[size_t(i)] = 1;
        lines.push_back(span_of(R, n, {e}));
    }
    return st_apartment(lines);
}

SteinbergClass st_act(const RMat& g, const SteinbergClass& x) {
    const SteinbergModule& m = module_of(x);
    if (g.R != m.R || g.rows != m.n || g.cols != m.n)
        throw std::invalid_argument("group element has the wrong shape");
    if (rank_field(g) != m.n) throw std::invalid_argument("group element is singular");
    const SubspacePool& pool = submodule_pool(*m.R, m.n);
    SteinbergClass out = st_zero(x.q, x.n);
    for (long f = 0; f < m.flag_count(); ++f) {
        const Int& c = x.coords[size_t(f)];
        if (c == 0) continue;
        std::vector<int> verts;
        for (int v : m.flags[size_t(f)]) {
            const Subspace& s = pool.subs[size_t(m.vertex_subspace[size_t(v)])];
            int vid = m.vertex_of_pool[size_t(pool.find(transform(g, s)))];
            if (vid < 0) throw internal_invariant_error("transformed vertex left the complex");
            verts.push_back(vid);
        }
        std::sort(verts.begin(), verts.end());
        long f2 = m.flag_index(verts);
        if (f2 < 0) throw internal_invariant_error("transformed flag missing");
        out.coords[size_t(f2)] += c * Int(m.flag_sign(f) * m.flag_sign(f2));
    }
    return out;
}

Chain st_to_flag_chain(const SteinbergClass& x) {
    const SteinbergModule& m = module_of(x);
    const SubspacePool& pool = submodule_pool(*m.R, m.n);
    auto level = dk_level(*m.R, m.n, 1, {m.n});
    Chain out;
    for (long f = 0; f < m.flag_count(); ++f) {
        const Int& c = x.coords[size_t(f)];
        if (c == 0) continue;
        std::vector<Subspace> cells{zero_subspace(*m.R, m.n)};
        std::vector<Subspace> interior;
        for (int v : m.flags[size_t(f)])
            interior.push_back(pool.subs[size_t(m.vertex_subspace[size_t(v)])]);
        std::sort(interior.begin(), interior.end(),
                  [](const Subspace& a, const Subspace& b) { return a.size() < b.size(); });
        for (auto& s : interior) cells.push_back(std::move(s));
        cells.push_back(full_subspace(*m.R, m.n));
        long idx = level_index(level, make_lattice_grid(*m.R, m.n, {m.n}, cells));
        if (idx < 0) throw internal_invariant_error("flag grid missing from its level");
        Int term = c * Int(m.flag_sign(f));
        auto [it, fresh] = out.emplace(idx, term);
        if (!fresh && (it->second += term) == 0) out.erase(it);
    }
    return out;
}

SteinbergClass st_from_flag_chain(int q, int n, const Chain& c) {
    const SteinbergModule& m = steinberg_module(q, n);
    auto level = dk_level(*m.R, n, 1, {n});
    SteinbergClass out = st_zero(q, n);
    for (const auto& [idx, coeff] : c) {
        if (coeff == 0) continue;
        const LatticeGrid& g = level.at(size_t(idx));
        bool degenerate = false;
        for (int t = 0; t + 1 <= n; ++t)
            if (g.cells[size_t(t)] == g.cells[size_t(t) + 1]) degenerate = true;
        if (degenerate) continue;
        std::vector<int> verts;
        for (int t = 1; t < n; ++t) {
            int vid = m.vertex_of_pool[size_t(g.cells[size_t(t)])];
            if (vid < 0) throw internal_invariant_error("grid cell is not a complex vertex");
            verts.push_back(vid);
        }
        std::sort(verts.begin(), verts.end());
        long f = m.flag_index(verts);
        if (f < 0) throw internal_invariant_error("grid flag missing from the order complex");
        out.coords[size_t(f)] += coeff * Int(m.flag_sign(f));
    }
    if (!st_is_cycle(out)) throw internal_invariant_error("flag chain is not a cycle");
    return out;
}

SteinbergClass st_product(const SteinbergClass& a, const SteinbergClass& b) {
    if (a.q != b.q) throw std::invalid_argument("product factors over different fields");
    const CoeffRing& R = ring_for_q(a.q);
    int m = a.n, n = b.n, total = m + n;
    PointedSSetLevels xa = dk_sset(R, m, 1);
    PointedSSetLevels xb = dk_sset(R, n, 1);
    auto level_a = dk_level(R, m, 1, {total});
    auto level_b = dk_level(R, n, 1, {total});
    auto level_t = dk_level(R, total, 1, {total});
    Chain ca = st_to_flag_chain(a);
    Chain cb = st_to_flag_chain(b);
    Chain z = shuffle_product(xa, m, ca, xb, n, cb, [&](long ea, long eb) {
        LatticeGrid sum = block_sum(level_a.at(size_t(ea)), level_b.at(size_t(eb)));
        long idx = level_index(level_t, sum);
        if (idx < 0) throw internal_invariant_error("block sum missing from the target level");
        return idx;
    });
    return st_from_flag_chain(a.q, total, z);
}

std::vector<RMat> gl_generators(const CoeffRing& R, int n) {
    if (!R.is_field()) throw unsupported_operation_error("generators require a field");
    std::vector<RMat> out;
    for (int i = 0; i + 1 < n; ++i)
        for (uint8_t alpha : R.units) {
            RMat up = RMat::identity(R, n);
            up.at(i, i + 1) = alpha;
            out.push_back(up);
            RMat down = RMat::identity(R, n);
            down.at(i + 1, i) = alpha;
            out.push_back(down);
        }
    for (int i = 0; i + 1 < n; ++i) {
        RMat p = RMat::identity(R, n);
        p.at(i, i) = p.at(i + 1, i + 1) = 0;
        p.at(i, i + 1) = p.at(i + 1, i) = 1;
        out.push_back(p);
    }
    for (uint8_t u : R.units) {
        int order = 1;
        uint8_t acc = u;
        while (acc != 1) {
            acc = uint8_t(R.mul(acc, u));
            ++order;
        }
        if (order == int(R.size) - 1) {
            if (u != 1) {
                RMat d = RMat::identity(R, n);
                d.at(0, 0) = u;
                out.push_back(d);
            }
            break;
        }
    }
    return out;
}

LSPresentation lee_szczarba(int q, int n, long cap) {
    const CoeffRing& R = ring_for_q(q);
    const SteinbergModule& M = steinberg_module(q, n);
    long nonzero = ipow(q, n) - 1;
    Int tuples_bound = 1;
    for (int i = 0; i <= n; ++i) tuples_bound *= nonzero;
    if (tuples_bound > cap) throw cap_exceeded_error("spanning tuple enumeration exceeds cap");

    // generators: invertible matrices, i-th column the i-th basis vector
    std::vector<RMat> bases;
    std::map<std::string, long> basis_index;
    long total_mats = ipow(long(R.size), n * n);
    for (long code = 0; code < total_mats; ++code) {
        RMat mat(R, n, n);
        long rest = code;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                mat.at(i, j) = uint8_t(rest % R.size);
                rest /= R.size;
            }
        if (rank_field(mat) != n) continue;
        basis_index[matrix_key(mat)] = long(bases.size());
        bases.push_back(std::move(mat));
    }

    auto apartment_of = [&](const RMat& mat) {
        std::vector<Subspace> lines;
        for (int j = 0; j < n; ++j) {
            std::vector<uint8_t> col(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) col[size_t(i)] = mat.at(i, j);
            lines.push_back(span_of(R, n, {col}));
        }
        return st_apartment(lines);
    };

    // relations: alternating coordinate deletions of spanning (n+1)-tuples
    std::vector<std::vector<uint8_t>> vecs;
    for (long code = 1; code <= nonzero; ++code) vecs.push_back(decode_vector(R, n, code));
    std::vector<std::vector<std::pair<int, Int>>> rel_rows;
    std::vector<size_t> pick(size_t(n) + 1, 0);
    long tuple_count = 0;
    while (true) {
        RMat full(R, n, n + 1);
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i < n; ++i) full.at(i, j) = vecs[pick[size_t(j)]][size_t(i)];
        if (rank_field(full) == n) {
            ++tuple_count;
            std::vector<std::pair<int, Int>> row;
            for (int drop = 0; drop <= n; ++drop) {
                RMat face(R, n, n);
                for (int j = 0, t = 0; j <= n; ++j) {
                    if (j == drop) continue;
                    for (int i = 0; i < n; ++i) face.at(i, t) = full.at(i, j);
                    ++t;
                }
                auto it = basis_index.find(matrix_key(face));
                if (it == basis_index.end()) continue;
                row.push_back({int(it->second), Int(drop % 2 == 0 ? 1 : -1)});
            }
            rel_rows.push_back(std::move(row));
        }
        size_t t = 0;
        while (t <= size_t(n) && ++pick[t] == vecs.size()) pick[t++] = 0;
        if (t > size_t(n)) break;
    }
    SparseZMat rels(int(rel_rows.size()), int(bases.size()));
    for (size_t r = 0; r < rel_rows.size(); ++r)
        for (const auto& [c, v] : rel_rows[r]) rels.add(int(r), c, v);

    LSPresentation out;
    out.q = q;
    out.n = n;
    out.basis_count = long(bases.size());
    out.tuple_count = tuple_count;
    out.cokernel = presentation_cokernel(int(bases.size()), rels).group;

    // the map to the module: generator -> apartment class of its columns
    std::vector<SteinbergClass> images;
    images.reserve(bases.size());
    for (const auto& mat : bases) images.push_back(apartment_of(mat));
    out.relations_vanish = true;
    for (const auto& row : rel_rows) {
        SteinbergClass acc = st_zero(q, n);
        for (const auto& [c, v] : row) acc = acc + images[size_t(c)] * v;
        if (!acc.is_zero()) out.relations_vanish = false;
    }
    SparseZMat image_mat(int(M.flag_count()), int(bases.size()));
    for (size_t j = 0; j < images.size(); ++j)
        for (long i = 0; i < M.flag_count(); ++i)
            if (images[j].coords[size_t(i)] != 0) image_mat.add(int(i), int(j), images[j].coords[size_t(i)]);
    SnfResult snf = smith(image_mat, false);
    out.surjective = long(snf.factors.size()) == M.rank() &&
                     std::all_of(snf.factors.begin(), snf.factors.end(),
                                 [](const Int& f) { return f == 1 || f == -1; });
    out.isomorphic = out.relations_vanish && out.surjective &&
                     out.cokernel.is_free_of_rank(M.rank());
    return out;
}

namespace {

// All upper unitriangular matrices, odometer order over the entries above the
// diagonal.
std::vector<RMat> unipotent_group(const CoeffRing& R, int n) {
    std::vector<std::pair<int, int>> slots;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) slots.push_back({i, j});
    std::vector<RMat> out;
    std::vector<uint8_t> vals(slots.size(), 0);
    while (true) {
        RMat u = RMat::identity(R, n);
        for (size_t t = 0; t < slots.size(); ++t) u.at(slots[t].first, slots[t].second) = vals[t];
        out.push_back(std::move(u));
        size_t t = 0;
        while (t < slots.size() && ++vals[t] == R.size) vals[t++] = 0;
        if (t >= slots.size() && !slots.empty()) break;
        if (slots.empty()) break;
    }
    return out;
}

}  // namespace

Int CoinvariantsResult::image(const SteinbergClass& x, const SteinbergClass& y) const {
    if (kind != CoinvariantsKind::st2)
        throw unsupported_operation_error("image is defined for tensor-square coinvariants");
    if (class_images.empty() || !translate_solver)
        throw unsupported_operation_error("coinvariant image requires an infinite cyclic group");
    if (x.q != q || x.n != n || y.q != q || y.n != n)
        throw std::invalid_argument("classes live over the wrong space");
    auto xi = translate_solver->solve(x.coords);
    auto eta = translate_solver->solve(y.coords);
    if (!xi || !eta) throw std::invalid_argument("class is not in the module");
    long r = translate_count;
    Int acc = 0;
    for (long i = 0; i < r; ++i) {
        if ((*xi)[size_t(i)] == 0) continue;
        for (long j = 0; j < r; ++j) {
            if ((*eta)[size_t(j)] == 0) continue;
            acc += (*xi)[size_t(i)] * (*eta)[size_t(j)] *
                   class_images[size_t(pair_class[size_t(i * r + j)])];
        }
    }
    return acc;
}

CoinvariantsResult coinvariants(CoinvariantsKind kind, int q, int n,
                                const std::vector<RMat>* extra_generators,
                                bool collapse_translates) {
    const SteinbergModule& M = steinberg_module(q, n);
    const CoeffRing& R = ring_for_q(q);
    long r = M.rank();
    std::vector<RMat> gens = gl_generators(R, n);
    if (extra_generators)
        for (const auto& g : *extra_generators) gens.push_back(g);

    CoinvariantsResult out;
    out.kind = kind;
    out.q = q;
    out.n = n;

    if (kind == CoinvariantsKind::st) {
        SparseZMat K(int(M.flag_count()), int(r));
        for (long j = 0; j < r; ++j)
            for (long i = 0; i < M.flag_count(); ++i)
                if (M.kernel[size_t(j)][size_t(i)] != 0)
                    K.add(int(i), int(j), M.kernel[size_t(j)][size_t(i)]);
        LinearSolver solver(K);
        SparseZMat rels(int(gens.size() * size_t(r)), int(r));
        for (size_t g = 0; g < gens.size(); ++g)
            for (long j = 0; j < r; ++j) {
                SteinbergClass basis{q, n, std::vector<Int>(size_t(M.flag_count()), Int(0))};
                for (long i = 0; i < M.flag_count(); ++i)
                    basis.coords[size_t(i)] = M.kernel[size_t(j)][size_t(i)];
                auto img = solver.solve(st_act(gens[g], basis).coords);
                if (!img) throw internal_invariant_error("action left the module");
                int row = int(g * size_t(r) + size_t(j));
                for (long i = 0; i < r; ++i) {
                    Int c = (*img)[size_t(i)] - (i == j ? 1 : 0);
                    if (c != 0) rels.add(row, int(i), c);
                }
            }
        out.group = presentation_cokernel(int(r), rels).group;
        return out;
    }

    // tensor square over the unipotent-translate basis of the module
    std::vector<RMat> U = unipotent_group(R, n);
    if (long(U.size()) != r) throw internal_invariant_error("unipotent order mismatch");
    std::map<std::string, long> u_index;
    for (size_t i = 0; i < U.size(); ++i) u_index[matrix_key(U[i])] = long(i);

    SteinbergClass v = st_standard_apartment(q, n);
    std::vector<SteinbergClass> translates;
    translates.reserve(U.size());
    for (const auto& u : U) translates.push_back(st_act(u, v));
    SparseZMat B(int(M.flag_count()), int(r));
    for (long j = 0; j < r; ++j)
        for (long i = 0; i < M.flag_count(); ++i)
            if (translates[size_t(j)].coords[size_t(i)] != 0)
                B.add(int(i), int(j), translates[size_t(j)].coords[size_t(i)]);
    SnfResult bsnf = smith(B, false);
    if (long(bsnf.factors.size()) != r ||
        !std::all_of(bsnf.factors.begin(), bsnf.factors.end(),
                     [](const Int& f) { return f == 1 || f == -1; }))
        throw internal_invariant_error("translates do not form a module basis");
    out.translate_count = r;
    out.translate_solver = std::make_shared<const LinearSolver>(B);

    // diagonal unipotent orbits of translate pairs
    std::vector<long> left_mult(static_cast<size_t>(r) * static_cast<size_t>(r));
    for (long a = 0; a < r; ++a)
        for (long b = 0; b < r; ++b)
            left_mult[size_t(a * r + b)] = u_index.at(matrix_key(U[size_t(a)].mul(U[size_t(b)])));
    out.pair_class.assign(size_t(r) * size_t(r), -1);
    std::vector<std::pair<long, long>> reps;
    if (collapse_translates) {
        for (long p = 0; p < r * r; ++p) {
            if (out.pair_class[size_t(p)] >= 0) continue;
            int cls = int(reps.size());
            reps.push_back({p / r, p % r});
            for (long a = 0; a < r; ++a) {
                long i2 = left_mult[size_t(a * r + p / r)];
                long j2 = left_mult[size_t(a * r + p % r)];
                out.pair_class[size_t(i2 * r + j2)] = cls;
            }
        }
        if (long(reps.size()) != r) throw internal_invariant_error("diagonal orbit count mismatch");
    } else {
        for (long p = 0; p < r * r; ++p) {
            out.pair_class[size_t(p)] = int(p);
            reps.push_back({p / r, p % r});
        }
    }
    long classes = long(reps.size());

    // pairing values per class, constant on orbits
    std::vector<std::vector<Int>> gram(static_cast<size_t>(r), std::vector<Int>(static_cast<size_t>(r)));
    for (long i = 0; i < r; ++i)
        for (long j = 0; j < r; ++j)
            gram[size_t(i)][size_t(j)] = st_pairing(translates[size_t(i)], translates[size_t(j)]);
    std::vector<Int> class_pairing(static_cast<size_t>(classes));
    for (const auto& [i, j] : reps)
        class_pairing[size_t(out.pair_class[size_t(i * r + j)])] = gram[size_t(i)][size_t(j)];
    for (long p = 0; p < r * r; ++p)
        if (gram[size_t(p / r)][size_t(p % r)] != class_pairing[size_t(out.pair_class[size_t(p)])])
            throw internal_invariant_error("pairing is not constant on diagonal orbits");

    std::set<std::string> u_keys;
    for (const auto& u : U) u_keys.insert(matrix_key(u));
    std::vector<size_t> used_gens;
    for (size_t g = 0; g < gens.size(); ++g) {
        if (collapse_translates && u_keys.count(matrix_key(gens[g]))) continue;
        used_gens.push_back(g);
    }

    std::vector<std::vector<std::pair<int, Int>>> rel_rows;
    out.pairing_map_defined = true;
    for (size_t g : used_gens) {
        std::vector<std::vector<std::pair<long, Int>>> cols(static_cast<size_t>(r));
        for (long j = 0; j < r; ++j) {
            auto img = out.translate_solver->solve(st_act(gens[g], translates[size_t(j)]).coords);
            if (!img) throw internal_invariant_error("action left the module");
            for (long i = 0; i < r; ++i)
                if ((*img)[size_t(i)] != 0) cols[size_t(j)].push_back({i, (*img)[size_t(i)]});
        }
        for (long i = 0; i < r; ++i)
            for (long j = 0; j < r; ++j) {
                std::map<int, Int> acc;
                acc[out.pair_class[size_t(i * r + j)]] += 1;
                for (const auto& [k, ck] : cols[size_t(i)])
                    for (const auto& [l, cl] : cols[size_t(j)])
                        acc[out.pair_class[size_t(k * r + l)]] -= ck * cl;
                std::vector<std::pair<int, Int>> row;
                Int pair_check = 0;
                for (auto& [c, val] : acc)
                    if (val != 0) {
                        pair_check += val * class_pairing[size_t(c)];
                        row.push_back({c, val});
                    }
                if (pair_check != 0) out.pairing_map_defined = false;
                if (!row.empty()) rel_rows.push_back(std::move(row));
            }
    }
    SparseZMat rels(int(rel_rows.size()), int(classes));
    for (size_t i = 0; i < rel_rows.size(); ++i)
        for (const auto& [c, val] : rel_rows[i]) rels.add(int(i), c, val);
    PresentedCokernel pres = presentation_cokernel(int(classes), rels, true);
    out.group = pres.group;

    if (out.group.is_free_of_rank(1)) {
        out.class_images.resize(size_t(classes));
        for (long c = 0; c < classes; ++c) out.class_images[size_t(c)] = pres.gen_images[size_t(c)][0];
        if (out.pairing_map_defined) {
            Int scale = 0;
            bool consistent = true;
            for (long c = 0; c < classes; ++c) {
                if (out.class_images[size_t(c)] == 0) {
                    if (class_pairing[size_t(c)] != 0) consistent = false;
                    continue;
                }
                Int s, rem;
                mpz_tdiv_qr(s.get_mpz_t(), rem.get_mpz_t(), class_pairing[size_t(c)].get_mpz_t(),
                            out.class_images[size_t(c)].get_mpz_t());
                if (rem != 0 || (scale != 0 && s != scale)) consistent = false;
                scale = s;
            }
            if (consistent) {
                out.pairing_scale = scale;
                out.pairing_iso = scale == 1 || scale == -1;
            }
        }
    }
    return out;
}

namespace {

// Rewriting steps for the coinvariant coefficient of a matrix against the
// standard Jordan target. All operations preserve invertibility.

RMat with_col_scaled(RMat m, int c, uint8_t s) {
    for (int i = 0; i < m.rows; ++i) m.at(i, c) = m.R->mul(m.at(i, c), s);
    return m;
}

RMat with_row_scaled(RMat m, int r, uint8_t s) {
    for (int j = 0; j < m.cols; ++j) m.at(r, j) = m.R->mul(m.at(r, j), s);
    return m;
}

RMat with_col_added(RMat m, int dst, int src) {
    for (int i = 0; i < m.rows; ++i) m.at(i, dst) = m.R->add(m.at(i, dst), m.at(i, src));
    return m;
}

RMat with_row_added(RMat m, int dst, int src) {
    for (int j = 0; j < m.cols; ++j) m.at(dst, j) = m.R->add(m.at(dst, j), m.at(src, j));
    return m;
}

// Move column `from` to position `to` (from < to), shifting the gap left; the
// permutation is a cycle of sign (-1)^(to - from).
RMat with_col_moved(const RMat& m, int from, int to) {
    RMat out = m;
    for (int i = 0; i < m.rows; ++i) {
        for (int j = from; j < to; ++j) out.at(i, j) = m.at(i, j + 1);
        out.at(i, to) = m.at(i, from);
    }
    return out;
}

RMat with_row_moved(const RMat& m, int from, int to) {
    RMat out = m;
    for (int j = 0; j < m.cols; ++j) {
        for (int i = from; i < to; ++i) out.at(i, j) = m.at(i + 1, j);
        out.at(to, j) = m.at(from, j);
    }
    return out;
}

// Rows at index >= k are settled: the tail is in Jordan-ones form and the
// leading block does not touch it.
bool settled_at(const RMat& m, int k) {
    int n = m.rows;
    for (int c = k; c < n; ++c) {
        if (m.at(c, c) != 1) return false;
        for (int i = 0; i < n; ++i) {
            if (i == c) continue;
            uint8_t v = m.at(i, c);
            if (i == c - 1) {
                if (v > 1) return false;
            } else if (v != 0) {
                return false;
            }
        }
    }
    for (int r = k; r < n; ++r)
        for (int c = 0; c < r; ++c)
            if (m.at(r, c) != 0) return false;
    return true;
}

std::vector<int> jordan_block_sizes(const RMat& m) {
    std::vector<int> sizes;
    int run = 1;
    for (int c = 1; c < m.rows; ++c) {
        if (m.at(c - 1, c) == 1) {
            ++run;
        } else {
            sizes.push_back(run);
            run = 1;
        }
    }
    sizes.push_back(run);
    return sizes;
}

Int reduce_rec(const RMat& m);

// One block-merge rewrite on the trailing window of two Jordan blocks of
// sizes a and b starting at u0 (0-based), with the off-block unit at local
// (i, a+1); i = 0 means no extra unit yet.
Int merge_step(const RMat& m, int u0, int a, int b, int i) {
    const CoeffRing& R = *m.R;
    uint8_t minus = R.neg(1);
    RMat base = m;
    for (int t = u0 + i; t < u0 + a; ++t) {
        base = with_row_scaled(std::move(base), t, minus);
        base = with_col_scaled(std::move(base), t, minus);
    }
    RMat tb = with_col_added(base, u0 + a, u0 + i);
    for (int t = u0; t < u0 + i; ++t) {
        tb = with_row_scaled(std::move(tb), t, minus);
        tb = with_col_scaled(std::move(tb), t, minus);
    }
    RMat ta = with_col_added(base, u0 + i, u0 + a);
    int w = a + b;
    std::vector<int> sigma(static_cast<size_t>(w));
    for (int l = 0; l < w; ++l)
        sigma[size_t(l)] = l < i ? l : (l < a ? l + b : l - (a - i));
    RMat ta2 = ta;
    for (int rl = 0; rl < w; ++rl)
        for (int cl = 0; cl < w; ++cl)
            ta2.at(u0 + sigma[size_t(rl)], u0 + sigma[size_t(cl)]) = ta.at(u0 + rl, u0 + cl);
    return reduce_rec(tb) + reduce_rec(ta2);
}

Int reduce_rec(const RMat& m) {
    static std::map<std::pair<const CoeffRing*, std::string>, Int> memo;
    static std::mutex mu;
    std::pair<const CoeffRing*, std::string> key{m.R, matrix_key(m)};
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
    }
    const CoeffRing& R = *m.R;
    int n = m.rows;
    Int result;

    if (settled_at(m, 0)) {
        std::vector<int> blocks = jordan_block_sizes(m);
        if (blocks.size() == 1) {
            result = 1;
        } else {
            int b = blocks.back();
            int a = blocks[blocks.size() - 2];
            result = merge_step(m, n - a - b, a, b, 0);
        }
    } else {
        // a single unit above the superdiagonal with a Jordan base resumes the
        // block merge; anything else takes a clearing step
        int vr = -1, vc = -1, violations = 0;
        for (int i = 0; i < n && violations < 2; ++i)
            for (int j = 0; j < n; ++j) {
                uint8_t v = m.at(i, j);
                bool ok = i == j ? v == 1 : (j == i + 1 ? v <= 1 : v == 0);
                if (!ok) {
                    ++violations;
                    vr = i;
                    vc = j;
                    if (violations >= 2) break;
                }
            }
        bool merged = false;
        if (violations == 1 && vc > vr + 1 && m.at(vr, vc) == 1) {
            RMat base = m;
            base.at(vr, vc) = 0;
            if (settled_at(base, 0)) {
                std::vector<int> blocks = jordan_block_sizes(base);
                if (blocks.size() >= 2) {
                    int b = blocks.back();
                    int a = blocks[blocks.size() - 2];
                    int u0 = n - a - b;
                    int i = vr - u0 + 1;
                    if (vc == u0 + a && i >= 1 && i < a) {
                        result = merge_step(m, u0, a, b, i);
                        merged = true;
                    }
                }
            }
        }
        if (!merged) {
            int k = 0;
            while (k <= n && !settled_at(m, k)) ++k;
            if (k < 1) throw internal_invariant_error("settled matrix reached the clearing step");
            int k0 = k - 1;
            bool row_done = m.at(k0, k0) == 1;
            for (int c = 0; c < k0; ++c)
                if (m.at(k0, c) != 0) row_done = false;
            if (!row_done) {
                std::vector<int> nz;
                for (int c = 0; c <= k0; ++c)
                    if (m.at(k0, c) != 0) nz.push_back(c);
                if (nz.empty()) throw internal_invariant_error("singular matrix in clearing");
                if (nz.size() == 1) {
                    int c = nz[0];
                    RMat m1 = with_col_scaled(m, c, R.inv(m.at(k0, c)));
                    if (c < k0) m1 = with_col_moved(m1, c, k0);
                    Int sub = reduce_rec(m1);
                    result = (k0 - c) % 2 ? -sub : sub;
                } else {
                    int i = nz[0], j = nz[1];
                    RMat m1 = with_col_scaled(m, i, R.inv(m.at(k0, i)));
                    m1 = with_col_scaled(std::move(m1), j, R.neg(R.inv(m.at(k0, j))));
                    result = reduce_rec(with_col_added(m1, i, j)) +
                             reduce_rec(with_col_added(m1, j, i));
                }
            } else {
                std::vector<int> nz;
                for (int r = 0; r < k0; ++r)
                    if (m.at(r, k0) != 0) nz.push_back(r);
                if (nz.empty()) throw internal_invariant_error("clearing step with nothing to clear");
                if (nz.size() == 1) {
                    int r0 = nz[0];
                    RMat m1 = with_row_scaled(m, r0, R.inv(m.at(r0, k0)));
                    if (r0 < k0 - 1) m1 = with_row_moved(m1, r0, k0 - 1);
                    Int sub = reduce_rec(m1);
                    result = (k0 - 1 - r0) % 2 ? -sub : sub;
                } else {
                    int r0 = nz[0], s0 = nz[1];
                    RMat m1 = with_row_scaled(m, r0, R.inv(m.at(r0, k0)));
                    m1 = with_row_scaled(std::move(m1), s0, R.neg(R.inv(m.at(s0, k0))));
                    result = reduce_rec(with_row_added(m1, r0, s0)) +
                             reduce_rec(with_row_added(m1, s0, r0));
                }
            }
        }
    }

    std::lock_guard<std::mutex> lock(mu);
    memo.emplace(std::move(key), result);
    return result;
}

}  // namespace

Int jordan_reduce(const RMat& psi) {
    if (!psi.R || !psi.R->is_field())
        throw unsupported_operation_error("jordan reduction requires a field");
    if (psi.rows != psi.cols || psi.rows < 1) throw std::invalid_argument("matrix must be square");
    if (rank_field(psi) != psi.rows) throw std::invalid_argument("matrix must be invertible");
    return reduce_rec(psi);
}

Int gamma_structure(int m, int n, int q) {
    if (m < 0 || n < 0) throw std::invalid_argument("degrees must be nonnegative");
    if (m == 0 || n == 0) return 1;
    int total = m + n;
    SteinbergClass z = st_product(st_standard_apartment(q, m), st_standard_apartment(q, n));
    if (!(z == st_standard_apartment(q, total)))
        throw internal_invariant_error("product of standard apartments is not the standard apartment");
    long twist = long(m) * n + long(m) * (m - 1) / 2 + long(n) * (n - 1) / 2 +
                 long(total) * (total - 1) / 2;
    Int num = st_pairing(z, z);
    if (twist % 2) num = -num;
    Int den = factorial(m) * factorial(n);
    Int c, rem;
    mpz_tdiv_qr(c.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    if (rem != 0) throw internal_invariant_error("structure constant is not integral");
    return c;
}

namespace {

// Signed determinant by fraction-free elimination.
Int bareiss_det(std::vector<std::vector<Int>> a) {
    long n = long(a.size());
    if (n == 0) return 1;
    Int sign = 1, prev = 1;
    for (long k = 0; k + 1 < n; ++k) {
        if (a[size_t(k)][size_t(k)] == 0) {
            long swap = -1;
            for (long i = k + 1; i < n && swap < 0; ++i)
                if (a[size_t(i)][size_t(k)] != 0) swap = i;
            if (swap < 0) return 0;
            std::swap(a[size_t(k)], a[size_t(swap)]);
            sign = -sign;
        }
        for (long i = k + 1; i < n; ++i)
            for (long j = k + 1; j < n; ++j) {
                Int num = a[size_t(i)][size_t(j)] * a[size_t(k)][size_t(k)] -
                          a[size_t(i)][size_t(k)] * a[size_t(k)][size_t(j)];
                Int quo, rem;
                mpz_tdiv_qr(quo.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), prev.get_mpz_t());
                if (rem != 0) throw internal_invariant_error("fraction-free elimination failed");
                a[size_t(i)][size_t(j)] = quo;
            }
        prev = a[size_t(k)][size_t(k)];
        for (long i = k + 1; i < n; ++i) a[size_t(i)][size_t(k)] = 0;
    }
    return sign * a[size_t(n - 1)][size_t(n - 1)];
}

// Lift of an exact integer into a prime field.
uint8_t lift_mod(const CoeffRing& F, const Int& v) {
    return uint8_t(F.lift_int(long(mpz_fdiv_ui(v.get_mpz_t(), F.size))));
}

// Kernel basis of an integer matrix reduced mod p, as mod-p column vectors.
std::vector<std::vector<uint8_t>> mod_kernel(const SparseZMat& s, const CoeffRing& F) {
    RMat mp(F, s.rows, s.cols);
    for (int i = 0; i < s.rows; ++i)
        for (const auto& [j, v] : s.data[size_t(i)]) mp.at(i, j) = lift_mod(F, v);
    RrefResult rr = rref(mp);
    std::vector<bool> is_pivot(size_t(s.cols), false);
    for (int p : rr.pivots) is_pivot[size_t(p)] = true;
    std::vector<std::vector<uint8_t>> out;
    for (int j = 0; j < s.cols; ++j) {
        if (is_pivot[size_t(j)]) continue;
        std::vector<uint8_t> v(size_t(s.cols), 0);
        v[size_t(j)] = 1;
        for (int t = 0; t < rr.rank; ++t) v[size_t(rr.pivots[size_t(t)])] = F.neg(rr.reduced.at(t, j));
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

FormReport form_report(int q, int n, Coeffs c) {
    const SteinbergModule& M = steinberg_module(q, n);
    const CoeffRing& R = ring_for_q(q);
    long r = M.rank();
    std::vector<RMat> gens = gl_generators(R, n);

    SparseZMat K(int(M.flag_count()), int(r));
    for (long j = 0; j < r; ++j)
        for (long i = 0; i < M.flag_count(); ++i)
            if (M.kernel[size_t(j)][size_t(i)] != 0)
                K.add(int(i), int(j), M.kernel[size_t(j)][size_t(i)]);
    LinearSolver solver(K);
    std::vector<std::vector<std::vector<Int>>> acts;  // per gen, column-major r x r
    for (const auto& g : gens) {
        std::vector<std::vector<Int>> cols;
        for (long j = 0; j < r; ++j) {
            SteinbergClass basis{q, n, std::vector<Int>(size_t(M.flag_count()), Int(0))};
            for (long i = 0; i < M.flag_count(); ++i)
                basis.coords[size_t(i)] = M.kernel[size_t(j)][size_t(i)];
            auto img = solver.solve(st_act(g, basis).coords);
            if (!img) throw internal_invariant_error("action left the module");
            cols.push_back(std::move(*img));
        }
        acts.push_back(std::move(cols));
    }
    std::vector<std::vector<Int>> gram(size_t(r), std::vector<Int>(size_t(r), Int(0)));
    for (long i = 0; i < r; ++i)
        for (long j = 0; j < r; ++j) {
            Int acc = 0;
            for (long t = 0; t < M.flag_count(); ++t)
                acc += M.kernel[size_t(i)][size_t(t)] * M.kernel[size_t(j)][size_t(t)];
            gram[size_t(i)][size_t(j)] = acc;
        }

    // unknowns X[i][j] at column i*r+j; invariance rows per generator and slot
    SparseZMat inv_sys(int(gens.size() * size_t(r) * size_t(r)), int(r * r));
    SparseZMat endo_sys(int(gens.size() * size_t(r) * size_t(r)), int(r * r));
    for (size_t g = 0; g < gens.size(); ++g) {
        const auto& A = acts[g];  // A[j] = column j
        for (long i = 0; i < r; ++i)
            for (long j = 0; j < r; ++j) {
                int row = int(g * size_t(r * r)) + int(i * r + j);
                // (A^T X A - X)[i][j]
                for (long k = 0; k < r; ++k) {
                    if (A[size_t(i)][size_t(k)] == 0) continue;
                    for (long l = 0; l < r; ++l) {
                        Int coef = A[size_t(i)][size_t(k)] * A[size_t(j)][size_t(l)];
                        if (coef != 0) inv_sys.add(row, int(k * r + l), coef);
                    }
                }
                inv_sys.add(row, int(i * r + j), -1);
                // (A X - X A)[i][j]
                for (long k = 0; k < r; ++k) {
                    if (A[size_t(k)][size_t(i)] != 0) endo_sys.add(row, int(k * r + j), A[size_t(k)][size_t(i)]);
                    if (A[size_t(j)][size_t(k)] != 0) endo_sys.add(row, int(i * r + k), -A[size_t(j)][size_t(k)]);
                }
            }
    }

    FormReport out;
    out.q = q;
    out.n = n;
    if (c.kind == Coeffs::Kind::mod_p) {
        const CoeffRing& F = ring_from_descriptor("Fq:" + std::to_string(c.p));
        auto forms = mod_kernel(inv_sys, F);
        out.invariant_form_dim = long(forms.size());
        out.symmetric = true;
        for (const auto& f : forms)
            for (long i = 0; i < r; ++i)
                for (long j = 0; j < r; ++j)
                    if (f[size_t(i * r + j)] != f[size_t(j * r + i)]) out.symmetric = false;
        out.equivariant_endo_dim = long(mod_kernel(endo_sys, F).size());
        RMat gp(F, int(r), int(r));
        for (long i = 0; i < r; ++i)
            for (long j = 0; j < r; ++j) gp.at(int(i), int(j)) = lift_mod(F, gram[size_t(i)][size_t(j)]);
        out.adjoint_kernel_dim = r - rank_field(gp);
        out.positive_definite = false;
        return out;
    }

    auto forms = kernel_basis(inv_sys);
    out.invariant_form_dim = long(forms.size());
    out.symmetric = true;
    for (const auto& f : forms)
        for (long i = 0; i < r; ++i)
            for (long j = 0; j < r; ++j)
                if (f[size_t(i * r + j)] != f[size_t(j * r + i)]) out.symmetric = false;
    out.equivariant_endo_dim = long(kernel_basis(endo_sys).size());
    SparseZMat gz(static_cast<int>(r), static_cast<int>(r));
    for (long i = 0; i < r; ++i)
        for (long j = 0; j < r; ++j)
            if (gram[size_t(i)][size_t(j)] != 0) gz.add(int(i), int(j), gram[size_t(i)][size_t(j)]);
    out.adjoint_kernel_dim = r - smith(gz, false).rank();
    out.positive_definite = true;
    for (long k = 1; k <= r; ++k) {
        std::vector<std::vector<Int>> lead(static_cast<size_t>(k), std::vector<Int>(static_cast<size_t>(k)));
        for (long i = 0; i < k; ++i)
            for (long j = 0; j < k; ++j) lead[size_t(i)][size_t(j)] = gram[size_t(i)][size_t(j)];
        if (bareiss_det(std::move(lead)) <= 0) out.positive_definite = false;
    }
    return out;
}

}  // namespace stmod
