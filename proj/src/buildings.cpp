#include "stmod/buildings.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <set>

#include "stmod/par.hpp"

namespace stmod {

namespace {

long ambient_size(const CoeffRing& R, int n) { return ipow(R.size, n); }

long code_add(const CoeffRing& R, int n, long a, long b) {
    long out = 0, base = 1;
    for (int i = 0; i < n; ++i) {
        out += long(R.add(int(a % R.size), int(b % R.size))) * base;
        a /= R.size;
        b /= R.size;
        base *= R.size;
    }
    return out;
}

long code_scale(const CoeffRing& R, int n, int lambda, long a) {
    long out = 0, base = 1;
    for (int i = 0; i < n; ++i) {
        out += long(R.mul(lambda, int(a % R.size))) * base;
        a /= R.size;
        base *= R.size;
    }
    return out;
}

// closure of a closed subgroup (sorted, containing 0) under one more generator
std::vector<long> extend_span(const CoeffRing& R, int n, const std::vector<long>& closed,
                              long gen) {
    std::vector<char> flags(size_t(ambient_size(R, n)), 0);
    for (int lambda = 0; lambda < R.size; ++lambda) {
        long m = code_scale(R, n, lambda, gen);
        for (long s : closed) flags[size_t(code_add(R, n, s, m))] = 1;
    }
    std::vector<long> out;
    for (long c = 0; c < long(flags.size()); ++c)
        if (flags[size_t(c)]) out.push_back(c);
    return out;
}

Subspace subspace_from_span(const CoeffRing& R, int ambient, std::vector<long> elems) {
    Subspace s;
    s.R = &R;
    s.ambient = ambient;
    // greedy canonical generators from the sorted element list
    std::vector<long> cur{0};
    std::vector<std::vector<uint8_t>> gens;
    for (long e : elems) {
        if (std::binary_search(cur.begin(), cur.end(), e)) continue;
        gens.push_back(decode_vector(R, ambient, e));
        cur = extend_span(R, ambient, cur, e);
    }
    if (cur != elems) throw internal_invariant_error("element list is not a submodule");
    RMat m(R, int(gens.size()), ambient);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < ambient; ++j) m.at(i, j) = gens[size_t(i)][size_t(j)];
    if (R.is_field() && m.rows > 0) {
        auto rr = rref(m);
        RMat red(R, rr.rank, ambient);
        for (int i = 0; i < rr.rank; ++i)
            for (int j = 0; j < ambient; ++j) red.at(i, j) = rr.reduced.at(i, j);
        m = std::move(red);
    }
    s.gens = std::move(m);
    s.elems = std::move(elems);
    return s;
}

std::vector<int> row_of(const RMat& m, int i) {
    std::vector<int> out(static_cast<size_t>(m.cols));
    for (int j = 0; j < m.cols; ++j) out[size_t(j)] = m.at(i, j);
    return out;
}

}  // namespace

long encode_vector(const CoeffRing& R, const std::vector<uint8_t>& v) {
    long out = 0, base = 1;
    for (uint8_t x : v) {
        out += long(x) * base;
        base *= R.size;
    }
    return out;
}

std::vector<uint8_t> decode_vector(const CoeffRing& R, int n, long code) {
    std::vector<uint8_t> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        v[size_t(i)] = uint8_t(code % R.size);
        code /= R.size;
    }
    return v;
}

bool Subspace::is_full() const { return size() == ambient_size(*R, ambient); }

bool Subspace::contains_code(long code) const {
    return std::binary_search(elems.begin(), elems.end(), code);
}

bool Subspace::contains(const Subspace& other) const {
    if (other.elems.size() > elems.size()) return false;
    return std::includes(elems.begin(), elems.end(), other.elems.begin(), other.elems.end());
}

std::string Subspace::label() const { return gens.rows == 0 ? "0" : gens.to_string(); }

bool Subspace::operator<(const Subspace& o) const {
    if (ambient != o.ambient) return ambient < o.ambient;
    return elems < o.elems;
}

Subspace span_of(const CoeffRing& R, int ambient, const std::vector<std::vector<uint8_t>>& gens) {
    std::vector<long> cur{0};
    for (const auto& g : gens) {
        if (int(g.size()) != ambient) throw std::invalid_argument("generator length mismatch");
        cur = extend_span(R, ambient, cur, encode_vector(R, g));
    }
    return subspace_from_span(R, ambient, std::move(cur));
}

Subspace zero_subspace(const CoeffRing& R, int ambient) {
    return subspace_from_span(R, ambient, {0});
}

Subspace full_subspace(const CoeffRing& R, int ambient) {
    std::vector<long> all(static_cast<size_t>(ambient_size(R, ambient)));
    for (long c = 0; c < long(all.size()); ++c) all[size_t(c)] = c;
    return subspace_from_span(R, ambient, std::move(all));
}

Subspace subspace_sum(const Subspace& a, const Subspace& b) {
    if (a.R != b.R || a.ambient != b.ambient) throw std::invalid_argument("ambient mismatch");
    std::vector<long> cur = a.elems;
    for (int i = 0; i < b.gens.rows; ++i)
        cur = extend_span(*a.R, a.ambient, cur, encode_vector(*a.R, [&] {
                              std::vector<uint8_t> r(static_cast<size_t>(b.gens.cols));
                              for (int j = 0; j < b.gens.cols; ++j) r[size_t(j)] = b.gens.at(i, j);
                              return r;
                          }()));
    return subspace_from_span(*a.R, a.ambient, std::move(cur));
}

Subspace subspace_intersect(const Subspace& a, const Subspace& b) {
    if (a.R != b.R || a.ambient != b.ambient) throw std::invalid_argument("ambient mismatch");
    std::vector<long> out;
    std::set_intersection(a.elems.begin(), a.elems.end(), b.elems.begin(), b.elems.end(),
                          std::back_inserter(out));
    return subspace_from_span(*a.R, a.ambient, std::move(out));
}

Subspace transform(const RMat& g, const Subspace& s) {
    if (g.R != s.R || g.rows != s.ambient || g.cols != s.ambient)
        throw std::invalid_argument("transform shape mismatch");
    RMat moved = s.gens.mul(g.transpose());
    std::vector<std::vector<uint8_t>> rows;
    for (int i = 0; i < moved.rows; ++i) {
        std::vector<uint8_t> r(static_cast<size_t>(moved.cols));
        for (int j = 0; j < moved.cols; ++j) r[size_t(j)] = moved.at(i, j);
        rows.push_back(std::move(r));
    }
    return span_of(*s.R, s.ambient, rows);
}

bool subspace_is_summand(const Subspace& s) {
    std::vector<std::vector<int>> gens;
    for (int i = 0; i < s.gens.rows; ++i) gens.push_back(row_of(s.gens, i));
    return is_direct_summand(*s.R, gens, s.ambient).is_summand;
}

RMat free_basis(const Subspace& s) {
    const CoeffRing& R = *s.R;
    if (s.gens.rows == 0) return RMat(R, 0, s.ambient);
    if (R.is_field()) return s.gens;
    RMat U;
    auto vals = local_smith(s.gens, &U);
    for (int v : vals)
        if (v != 0) throw unsupported_operation_error("submodule is not free");
    RMat ug = U.mul(s.gens);
    RMat basis(R, int(vals.size()), s.ambient);
    for (int i = 0; i < basis.rows; ++i)
        for (int j = 0; j < s.ambient; ++j) basis.at(i, j) = ug.at(i, j);
    return basis;
}

namespace {

SubspacePool build_pool(const CoeffRing& R, int n) {
    SubspacePool pool;
    pool.R = &R;
    pool.n = n;
    std::set<std::vector<long>> seen;
    std::vector<std::vector<long>> queue{{0}};
    seen.insert({0});
    long total = ambient_size(R, n);
    for (size_t head = 0; head < queue.size(); ++head) {
        auto cur = queue[head];
        for (long c = 1; c < total; ++c) {
            if (std::binary_search(cur.begin(), cur.end(), c)) continue;
            auto next = extend_span(R, n, cur, c);
            if (seen.insert(next).second) queue.push_back(std::move(next));
        }
    }
    for (auto& elems : seen) pool.subs.push_back(subspace_from_span(R, n, elems));
    std::sort(pool.subs.begin(), pool.subs.end());
    for (int i = 0; i < int(pool.subs.size()); ++i)
        if (R.is_field() || subspace_is_summand(pool.subs[size_t(i)])) pool.summands.push_back(i);
    return pool;
}

}  // namespace

int SubspacePool::find(const Subspace& s) const {
    auto it = std::lower_bound(subs.begin(), subs.end(), s);
    if (it == subs.end() || !(*it == s)) return -1;
    return int(it - subs.begin());
}

int SubspacePool::zero_id() const {
    Subspace z = zero_subspace(*R, n);
    return find(z);
}

int SubspacePool::full_id() const {
    Subspace f = full_subspace(*R, n);
    return find(f);
}

const SubspacePool& submodule_pool(const CoeffRing& R, int n) {
    static std::mutex mtx;
    static std::map<std::pair<const CoeffRing*, int>, std::unique_ptr<SubspacePool>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(&R, n);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_unique<SubspacePool>(build_pool(R, n))).first;
    return *it->second;
}

namespace {

long slot_count(const std::vector<int>& shape, int off) {
    long c = 1;
    for (int p : shape) c *= p + off;
    return c;
}

long slot_of(const std::vector<int>& shape, const std::vector<int>& a, int off, int lo) {
    long idx = 0;
    for (size_t t = 0; t < shape.size(); ++t) {
        if (a[t] < lo || a[t] > shape[t]) throw std::out_of_range("grid coordinate");
        idx = idx * (shape[t] + off) + (a[t] - lo);
    }
    return idx;
}

std::vector<int> coords_of(const std::vector<int>& shape, long slot, int off, int lo) {
    std::vector<int> a(shape.size());
    for (size_t t = shape.size(); t-- > 0;) {
        long w = shape[t] + off;
        a[t] = int(slot % w) + lo;
        slot /= w;
    }
    return a;
}

}  // namespace

long LatticeGrid::cell_slot(const std::vector<int>& a) const { return slot_of(shape, a, 1, 0); }

const Subspace& LatticeGrid::at(const std::vector<int>& a) const {
    return pool->subs[size_t(cells[size_t(cell_slot(a))])];
}

std::string LatticeGrid::label() const {
    std::string out;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out += "/";
        out += pool->subs[size_t(cells[i])].label();
    }
    return out;
}

bool LatticeGrid::operator<(const LatticeGrid& o) const {
    if (shape != o.shape) return shape < o.shape;
    return cells < o.cells;
}

long SplitGrid::part_slot(const std::vector<int>& i) const { return slot_of(shape, i, 0, 1); }

const Subspace& SplitGrid::at(const std::vector<int>& i) const {
    return pool->subs[size_t(parts[size_t(part_slot(i))])];
}

std::string SplitGrid::label() const {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += "/";
        out += pool->subs[size_t(parts[i])].label();
    }
    return out;
}

bool SplitGrid::operator<(const SplitGrid& o) const {
    if (shape != o.shape) return shape < o.shape;
    return parts < o.parts;
}

LatticeGrid make_lattice_grid(const CoeffRing& R, int n, std::vector<int> shape,
                              const std::vector<Subspace>& cells) {
    const SubspacePool& pool = submodule_pool(R, n);
    LatticeGrid g;
    g.pool = &pool;
    g.shape = std::move(shape);
    if (long(cells.size()) != slot_count(g.shape, 1)) throw std::invalid_argument("cell count");
    for (const auto& s : cells) {
        int id = pool.find(s);
        if (id < 0) throw internal_invariant_error("cell not in submodule pool");
        g.cells.push_back(id);
    }
    return g;
}

SplitGrid make_split_grid(const CoeffRing& R, int n, std::vector<int> shape,
                          const std::vector<Subspace>& parts) {
    const SubspacePool& pool = submodule_pool(R, n);
    SplitGrid g;
    g.pool = &pool;
    g.shape = std::move(shape);
    if (long(parts.size()) != slot_count(g.shape, 0)) throw std::invalid_argument("part count");
    for (const auto& s : parts) {
        int id = pool.find(s);
        if (id < 0) throw internal_invariant_error("part not in submodule pool");
        g.parts.push_back(id);
    }
    return g;
}

bool grid_monotone(const LatticeGrid& g) {
    long total = slot_count(g.shape, 1);
    for (long slot = 0; slot < total; ++slot) {
        auto a = coords_of(g.shape, slot, 1, 0);
        for (size_t t = 0; t < g.shape.size(); ++t) {
            if (a[t] == g.shape[t]) continue;
            auto b = a;
            ++b[t];
            if (!g.at(b).contains(g.at(a))) return false;
        }
    }
    return true;
}

bool is_full(const LatticeGrid& g) {
    long total = slot_count(g.shape, 1);
    for (long slot = 0; slot < total; ++slot) {
        auto a = coords_of(g.shape, slot, 1, 0);
        bool border = false;
        for (int v : a) border = border || v == 0;
        const Subspace& s = g.pool->subs[size_t(g.cells[size_t(slot)])];
        if (border && !s.is_zero()) return false;
        if (a == g.shape && !s.is_full()) return false;
    }
    return true;
}

bool is_splitting(const SplitGrid& g) {
    const CoeffRing& R = *g.pool->R;
    Subspace acc = zero_subspace(R, g.pool->n);
    for (int id : g.parts) {
        const Subspace& part = g.pool->subs[size_t(id)];
        Subspace next = subspace_sum(acc, part);
        if (next.size() != acc.size() * part.size()) return false;
        acc = std::move(next);
    }
    return acc.is_full();
}

namespace {

int size_log_p(const CoeffRing& R, long sz) {
    int s = 0;
    while (sz > 1) {
        if (sz % R.p) throw internal_invariant_error("submodule size is not a p-power");
        sz /= R.p;
        ++s;
    }
    return s;
}

}  // namespace

bool is_lattice(const LatticeGrid& g) {
    const CoeffRing& R = *g.pool->R;
    int n = g.pool->n;
    int k = g.k();
    if (!grid_monotone(g)) return false;
    if (!R.is_field()) {
        std::set<int> summand_ids(g.pool->summands.begin(), g.pool->summands.end());
        for (int id : g.cells)
            if (!summand_ids.count(id)) return false;
    }
    // adjacent cubes: top corner b with every coordinate at least 1
    long total = slot_count(g.shape, 1);
    for (long slot = 0; slot < total; ++slot) {
        auto b = coords_of(g.shape, slot, 1, 0);
        bool ok = true;
        for (int v : b) ok = ok && v >= 1;
        if (!ok) continue;
        int corners = (1 << k) - 1;  // punctured cube
        std::vector<RMat> basis(static_cast<size_t>(corners));
        std::vector<int> offset(size_t(corners) + 1, 0);
        std::vector<Subspace> corner_sub;
        for (int m = 0; m < corners; ++m) {
            auto c = b;
            for (int t = 0; t < k; ++t)
                if (!(m >> t & 1)) --c[size_t(t)];
            corner_sub.push_back(g.at(c));
            basis[size_t(m)] = free_basis(corner_sub.back());
            offset[size_t(m) + 1] = offset[size_t(m)] + basis[size_t(m)].rows;
        }
        int vrows = offset[size_t(corners)];
        // edge-vertex incidence columns: u at source minus its expansion at target
        std::vector<std::vector<uint8_t>> cols;
        for (int m = 0; m < corners; ++m)
            for (int t = 0; t < k; ++t) {
                if (m >> t & 1) continue;
                int m2 = m | (1 << t);
                if (m2 == corners) continue;
                for (int r = 0; r < basis[size_t(m)].rows; ++r) {
                    std::vector<uint8_t> u(static_cast<size_t>(n));
                    for (int j = 0; j < n; ++j) u[size_t(j)] = basis[size_t(m)].at(r, j);
                    auto coeff = solve_left(basis[size_t(m2)], u);
                    if (!coeff) throw internal_invariant_error("inclusion not solvable in basis");
                    std::vector<uint8_t> col(size_t(vrows), 0);
                    col[size_t(offset[size_t(m)] + r)] = 1;
                    for (int s = 0; s < basis[size_t(m2)].rows; ++s)
                        col[size_t(offset[size_t(m2)] + s)] =
                            uint8_t(R.sub(col[size_t(offset[size_t(m2)] + s)], (*coeff)[size_t(s)]));
                    cols.push_back(std::move(col));
                }
            }
        RMat E(R, vrows, int(cols.size()));
        for (int j = 0; j < E.cols; ++j)
            for (int i = 0; i < vrows; ++i) E.at(i, j) = cols[size_t(j)][size_t(i)];
        Subspace sum = corner_sub[0];
        for (int m = 1; m < corners; ++m) sum = subspace_sum(sum, corner_sub[size_t(m)]);
        if (R.is_field()) {
            int colim_dim = vrows - (E.cols ? rank_field(E) : 0);
            if (colim_dim != sum.min_gens()) return false;
        } else {
            // sizes counted in residue-field units: |pi^v R| = q^(e-v)
            int e = R.nilpotency;
            int unit_log = size_log_p(R, R.size);
            if (unit_log % e) throw internal_invariant_error("ring size is not a residue power");
            unit_log /= e;
            int im_log = 0;
            if (E.cols)
                for (int v : local_smith(E)) im_log += (e - v) * unit_log;
            int coker_log = e * unit_log * vrows - im_log;
            if (coker_log != size_log_p(R, sum.size())) return false;
            if (!subspace_is_summand(sum)) return false;
        }
    }
    return true;
}

SimplicialComplex tits(int q, int n) {
    const CoeffRing& R = ring_from_descriptor("Fq:" + std::to_string(q));
    const SubspacePool& pool = submodule_pool(R, n);
    SimplicialComplex out;
    std::vector<int> vertex_ids;
    std::map<int, int> vertex_of;
    for (int id : pool.summands) {
        const Subspace& s = pool.subs[size_t(id)];
        if (s.is_zero() || s.is_full()) continue;
        vertex_of[id] = int(vertex_ids.size());
        vertex_ids.push_back(id);
        out.vertex_labels.push_back(s.label());
    }
    out.vertex_count = int(vertex_ids.size());
    // every chain under proper inclusion, rooted at its smallest member
    std::function<void(std::vector<int>&)> extend = [&](std::vector<int>& chain) {
        std::vector<int> simplex;
        for (int id : chain) simplex.push_back(vertex_of.at(id));
        out.add_simplex(simplex);
        const Subspace& top = pool.subs[size_t(chain.back())];
        for (int id : vertex_ids) {
            const Subspace& s = pool.subs[size_t(id)];
            if (s.size() <= top.size() || !s.contains(top)) continue;
            chain.push_back(id);
            extend(chain);
            chain.pop_back();
        }
    };
    for (int id : vertex_ids) {
        std::vector<int> chain{id};
        extend(chain);
    }
    return out;
}

namespace {

// all splittings of `target` with parts from the summand pool, shape slots
// row-major; calls fn for each
void splittings_rec(const SubspacePool& pool, const Subspace& target, long slots,
                    std::vector<int>& parts, const Subspace& partial, long& count, long cap,
                    const std::function<void(const std::vector<int>&)>& fn) {
    if (long(parts.size()) == slots) {
        if (partial.elems == target.elems) {
            if (++count > cap) throw cap_exceeded_error("splitting enumeration cap");
            fn(parts);
        }
        return;
    }
    for (int id : pool.summands) {
        const Subspace& cand = pool.subs[size_t(id)];
        if (cand.size() * partial.size() > target.size()) continue;
        if (!target.contains(cand)) continue;
        bool direct = true;
        for (long c : cand.elems)
            if (c != 0 && partial.contains_code(c)) {
                direct = false;
                break;
            }
        if (!direct) continue;
        Subspace next = subspace_sum(partial, cand);
        if (next.size() != cand.size() * partial.size()) continue;  // non-direct join
        parts.push_back(id);
        splittings_rec(pool, target, slots, parts, next, count, cap, fn);
        parts.pop_back();
    }
}

std::vector<std::vector<int>> enumerate_splittings(const CoeffRing& R, int n,
                                                   const Subspace& target,
                                                   const std::vector<int>& shape, long cap) {
    const SubspacePool& pool = submodule_pool(R, n);
    long slots = slot_count(shape, 0);
    std::vector<std::vector<int>> out;
    if (slots == 0) {
        if (target.is_zero()) out.push_back({});
        return out;
    }
    // parallel over the first slot's candidate
    auto branches = par::map_index<std::vector<std::vector<int>>>(
        pool.summands.size(), [&](size_t bi) {
            std::vector<std::vector<int>> local;
            int id = pool.summands[bi];
            const Subspace& cand = pool.subs[size_t(id)];
            if (!target.contains(cand)) return local;
            std::vector<int> parts{id};
            long count = 0;
            splittings_rec(pool, target, slots, parts, cand, count, cap,
                           [&](const std::vector<int>& p) { local.push_back(p); });
            return local;
        });
    long total = 0;
    for (auto& b : branches) {
        total += long(b.size());
        if (total > cap) throw cap_exceeded_error("splitting enumeration cap");
        for (auto& p : b) out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

std::vector<SplitGrid> split_dk_level(const CoeffRing& R, int n, int k,
                                      const std::vector<int>& shape, long cap) {
    if (int(shape.size()) != k) throw std::invalid_argument("shape arity mismatch");
    const SubspacePool& pool = submodule_pool(R, n);
    Subspace target = full_subspace(R, n);
    std::vector<SplitGrid> out;
    for (auto& parts : enumerate_splittings(R, n, target, shape, cap)) {
        SplitGrid g;
        g.pool = &pool;
        g.shape = shape;
        g.parts = std::move(parts);
        out.push_back(std::move(g));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<LatticeGrid> dk_level(const CoeffRing& R, int n, int k, const std::vector<int>& shape,
                                  long cap) {
    if (int(shape.size()) != k) throw std::invalid_argument("shape arity mismatch");
    const SubspacePool& pool = submodule_pool(R, n);
    if (k == 1) {
        // monotone chains of summands from 0 to R^n
        int p = shape[0];
        std::vector<LatticeGrid> out;
        int zid = pool.zero_id(), fid = pool.full_id();
        std::vector<int> cells{zid};
        long count = 0;
        std::function<void()> rec = [&]() {
            if (int(cells.size()) == p + 1) {
                if (cells.back() != fid) return;
                if (++count > cap) throw cap_exceeded_error("lattice enumeration cap");
                LatticeGrid g;
                g.pool = &pool;
                g.shape = shape;
                g.cells = cells;
                out.push_back(std::move(g));
                return;
            }
            for (int id : pool.summands) {
                if (!pool.subs[size_t(id)].contains(pool.subs[size_t(cells.back())])) continue;
                cells.push_back(id);
                rec();
                cells.pop_back();
            }
        };
        if (p == 0) {
            if (zid == fid) rec();
        } else {
            rec();
        }
        std::sort(out.begin(), out.end());
        return out;
    }
    auto splits = split_dk_level(R, n, k, shape, cap);
    std::vector<LatticeGrid> out;
    out.reserve(splits.size());
    for (const auto& s : splits) out.push_back(forget_splitting(s));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

long level_index(const std::vector<LatticeGrid>& level, const LatticeGrid& g) {
    auto it = std::lower_bound(level.begin(), level.end(), g);
    if (it == level.end() || !(*it == g)) return -1;
    return long(it - level.begin());
}

long level_index(const std::vector<SplitGrid>& level, const SplitGrid& g) {
    auto it = std::lower_bound(level.begin(), level.end(), g);
    if (it == level.end() || !(*it == g)) return -1;
    return long(it - level.begin());
}

LatticeGrid lattice_face(const LatticeGrid& g, int dir, int i) {
    // precompose with the coface skipping i in direction dir
    LatticeGrid out;
    out.pool = g.pool;
    out.shape = g.shape;
    --out.shape[size_t(dir)];
    long total = slot_count(out.shape, 1);
    out.cells.resize(static_cast<size_t>(total));
    for (long slot = 0; slot < total; ++slot) {
        auto a = coords_of(out.shape, slot, 1, 0);
        auto src = a;
        if (src[size_t(dir)] >= i) ++src[size_t(dir)];
        out.cells[size_t(slot)] = g.cells[size_t(g.cell_slot(src))];
    }
    return out;
}

LatticeGrid lattice_degeneracy(const LatticeGrid& g, int dir, int i) {
    LatticeGrid out;
    out.pool = g.pool;
    out.shape = g.shape;
    ++out.shape[size_t(dir)];
    long total = slot_count(out.shape, 1);
    out.cells.resize(static_cast<size_t>(total));
    for (long slot = 0; slot < total; ++slot) {
        auto a = coords_of(out.shape, slot, 1, 0);
        auto src = a;
        if (src[size_t(dir)] > i) --src[size_t(dir)];
        out.cells[size_t(slot)] = g.cells[size_t(g.cell_slot(src))];
    }
    return out;
}

std::optional<SplitGrid> split_face(const SplitGrid& g, int dir, int i) {
    const CoeffRing& R = *g.pool->R;
    int p = g.shape[size_t(dir)];
    SplitGrid out;
    out.pool = g.pool;
    out.shape = g.shape;
    --out.shape[size_t(dir)];
    long total = slot_count(out.shape, 0);
    std::vector<Subspace> acc(static_cast<size_t>(total));
    for (auto& s : acc) s = zero_subspace(R, g.pool->n);
    long src_total = slot_count(g.shape, 0);
    for (long slot = 0; slot < src_total; ++slot) {
        auto idx = coords_of(g.shape, slot, 0, 1);
        int c = idx[size_t(dir)];
        // simplicial circle: slot c maps to the basepoint at the border cases
        if ((i == 0 && c == 1) || (i == p && c == p)) {
            if (!g.pool->subs[size_t(g.parts[size_t(slot)])].is_zero()) return std::nullopt;
            continue;
        }
        idx[size_t(dir)] = c - (i < c ? 1 : 0);
        long dst = slot_of(out.shape, idx, 0, 1);
        acc[size_t(dst)] =
            subspace_sum(acc[size_t(dst)], g.pool->subs[size_t(g.parts[size_t(slot)])]);
    }
    out.parts.resize(static_cast<size_t>(total));
    for (long slot = 0; slot < total; ++slot) {
        int id = g.pool->find(acc[size_t(slot)]);
        if (id < 0) throw internal_invariant_error("merged part missing from pool");
        out.parts[size_t(slot)] = id;
    }
    return out;
}

SplitGrid split_degeneracy(const SplitGrid& g, int dir, int i) {
    SplitGrid out;
    out.pool = g.pool;
    out.shape = g.shape;
    ++out.shape[size_t(dir)];
    long total = slot_count(out.shape, 0);
    out.parts.resize(static_cast<size_t>(total));
    int zid = g.pool->zero_id();
    for (long slot = 0; slot < total; ++slot) {
        auto idx = coords_of(out.shape, slot, 0, 1);
        int c = idx[size_t(dir)];
        if (c == i + 1) {
            out.parts[size_t(slot)] = zid;
            continue;
        }
        idx[size_t(dir)] = c - (c > i + 1 ? 1 : 0);
        out.parts[size_t(slot)] = g.parts[size_t(g.part_slot(idx))];
    }
    return out;
}

namespace {

struct LatticeCtx {
    const CoeffRing* R;
    int n, k;
    long cap;
    std::map<std::vector<int>, std::vector<LatticeGrid>> levels;

    const std::vector<LatticeGrid>& ensure(const std::vector<int>& p) {
        auto it = levels.find(p);
        if (it == levels.end()) it = levels.emplace(p, dk_level(*R, n, k, p, cap)).first;
        return it->second;
    }
};

struct SplitCtx {
    const CoeffRing* R;
    int n, k;
    long cap;
    std::map<std::vector<int>, std::vector<SplitGrid>> levels;

    const std::vector<SplitGrid>& ensure(const std::vector<int>& p) {
        auto it = levels.find(p);
        if (it == levels.end()) it = levels.emplace(p, split_dk_level(*R, n, k, p, cap)).first;
        return it->second;
    }
};

}  // namespace

PointedSSetLevels dk_sset(const CoeffRing& R, int n, int k, long cap) {
    auto ctx = std::make_shared<LatticeCtx>();
    ctx->R = &R;
    ctx->n = n;
    ctx->k = k;
    ctx->cap = cap;
    PointedSSetLevels x;
    x.arity = k;
    x.level = [ctx](const std::vector<int>& p) {
        std::vector<std::string> out;
        for (const auto& g : ctx->ensure(p)) out.push_back(g.label());
        return out;
    };
    x.face = [ctx](const std::vector<int>& p, long e, int dir, int i) -> long {
        auto h = lattice_face(ctx->ensure(p)[size_t(e)], dir, i);
        if (!is_full(h)) return -1;
        auto q = p;
        --q[size_t(dir)];
        long idx = level_index(ctx->ensure(q), h);
        if (idx < 0) throw internal_invariant_error("face of a full lattice missing from level");
        return idx;
    };
    x.degeneracy = [ctx](const std::vector<int>& p, long e, int dir, int i) -> long {
        auto h = lattice_degeneracy(ctx->ensure(p)[size_t(e)], dir, i);
        auto q = p;
        ++q[size_t(dir)];
        long idx = level_index(ctx->ensure(q), h);
        if (idx < 0) throw internal_invariant_error("degenerate lattice missing from level");
        return idx;
    };
    return x;
}

PointedSSetLevels split_dk_sset(const CoeffRing& R, int n, int k, long cap) {
    auto ctx = std::make_shared<SplitCtx>();
    ctx->R = &R;
    ctx->n = n;
    ctx->k = k;
    ctx->cap = cap;
    PointedSSetLevels x;
    x.arity = k;
    x.level = [ctx](const std::vector<int>& p) {
        std::vector<std::string> out;
        for (const auto& g : ctx->ensure(p)) out.push_back(g.label());
        return out;
    };
    x.face = [ctx](const std::vector<int>& p, long e, int dir, int i) -> long {
        auto h = split_face(ctx->ensure(p)[size_t(e)], dir, i);
        if (!h) return -1;
        auto q = p;
        --q[size_t(dir)];
        long idx = level_index(ctx->ensure(q), *h);
        if (idx < 0) throw internal_invariant_error("face of a splitting missing from level");
        return idx;
    };
    x.degeneracy = [ctx](const std::vector<int>& p, long e, int dir, int i) -> long {
        auto h = split_degeneracy(ctx->ensure(p)[size_t(e)], dir, i);
        auto q = p;
        ++q[size_t(dir)];
        long idx = level_index(ctx->ensure(q), h);
        if (idx < 0) throw internal_invariant_error("degenerate splitting missing from level");
        return idx;
    };
    return x;
}

LatticeGrid forget_splitting(const SplitGrid& s) {
    const CoeffRing& R = *s.pool->R;
    int n = s.pool->n;
    LatticeGrid out;
    out.pool = s.pool;
    out.shape = s.shape;
    long total = slot_count(s.shape, 1);
    out.cells.resize(static_cast<size_t>(total));
    std::vector<Subspace> acc(static_cast<size_t>(total));
    for (long slot = 0; slot < total; ++slot) {
        auto a = coords_of(s.shape, slot, 1, 0);
        bool border = false;
        for (int v : a) border = border || v == 0;
        if (border) {
            acc[size_t(slot)] = zero_subspace(R, n);
        } else {
            // phi(a) = sum over predecessors plus the part at a
            Subspace cur = s.at(a);
            for (size_t t = 0; t < s.shape.size(); ++t) {
                auto b = a;
                --b[size_t(t)];
                cur = subspace_sum(cur, acc[size_t(slot_of(s.shape, b, 1, 0))]);
            }
            acc[size_t(slot)] = std::move(cur);
        }
        int id = s.pool->find(acc[size_t(slot)]);
        if (id < 0) throw internal_invariant_error("partial sum missing from pool");
        out.cells[size_t(slot)] = id;
    }
    return out;
}

std::vector<LatticeGrid> smash_embed(const LatticeGrid& g) {
    std::vector<LatticeGrid> flags;
    for (size_t j = 0; j < g.shape.size(); ++j) {
        LatticeGrid f;
        f.pool = g.pool;
        f.shape = {g.shape[j]};
        for (int i = 0; i <= g.shape[j]; ++i) {
            auto a = g.shape;
            a[j] = i;
            f.cells.push_back(g.cells[size_t(g.cell_slot(a))]);
        }
        flags.push_back(std::move(f));
    }
    return flags;
}

LatticeGrid from_flags_by_intersection(const std::vector<LatticeGrid>& flags) {
    if (flags.empty()) throw std::invalid_argument("no flags");
    const SubspacePool* pool = flags[0].pool;
    LatticeGrid out;
    out.pool = pool;
    for (const auto& f : flags) {
        if (f.pool != pool || f.k() != 1) throw std::invalid_argument("flags must share a pool");
        out.shape.push_back(f.shape[0]);
    }
    long total = slot_count(out.shape, 1);
    for (long slot = 0; slot < total; ++slot) {
        auto a = coords_of(out.shape, slot, 1, 0);
        Subspace cur = flags[0].at({a[0]});
        for (size_t j = 1; j < flags.size(); ++j)
            cur = subspace_intersect(cur, flags[j].at({a[size_t(j)]}));
        int id = pool->find(cur);
        if (id < 0) throw internal_invariant_error("intersection missing from pool");
        out.cells.push_back(id);
    }
    return out;
}

Chain apartment_chain(const std::vector<Subspace>& lines,
                      const std::vector<LatticeGrid>* level) {
    if (lines.empty()) throw std::invalid_argument("empty decomposition");
    const CoeffRing& R = *lines[0].R;
    int n = lines[0].ambient;
    int m = int(lines.size());
    for (const auto& l : lines)
        if (l.size() != R.size) throw std::invalid_argument("component is not free of rank one");
    // direct and spanning
    {
        Subspace acc = zero_subspace(R, n);
        for (const auto& l : lines) {
            Subspace next = subspace_sum(acc, l);
            if (next.size() != acc.size() * l.size())
                throw std::invalid_argument("components are not independent");
            acc = std::move(next);
        }
        if (!acc.is_full()) throw std::invalid_argument("components do not span");
    }
    std::vector<LatticeGrid> own;
    if (!level) {
        own = dk_level(R, n, 1, {m});
        level = &own;
    }
    const SubspacePool& pool = submodule_pool(R, n);
    Chain out;
    std::vector<int> perm(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) perm[size_t(i)] = i;
    do {
        LatticeGrid f;
        f.pool = &pool;
        f.shape = {m};
        Subspace acc = zero_subspace(R, n);
        f.cells.push_back(pool.find(acc));
        for (int i = 0; i < m; ++i) {
            acc = subspace_sum(acc, lines[size_t(perm[size_t(i)])]);
            f.cells.push_back(pool.find(acc));
        }
        long idx = level_index(*level, f);
        if (idx < 0) throw internal_invariant_error("partial-sum flag missing from level");
        Int coeff = perm_sign(perm);
        auto it = out.find(idx);
        if (it == out.end())
            out[idx] = std::move(coeff);
        else {
            it->second += coeff;
            if (it->second == 0) out.erase(it);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

namespace {

Subspace embed_subspace(const Subspace& s, int total, int offset) {
    const CoeffRing& R = *s.R;
    std::vector<std::vector<uint8_t>> rows;
    for (int i = 0; i < s.gens.rows; ++i) {
        std::vector<uint8_t> r(size_t(total), 0);
        for (int j = 0; j < s.gens.cols; ++j) r[size_t(offset + j)] = s.gens.at(i, j);
        rows.push_back(std::move(r));
    }
    return span_of(R, total, rows);
}

}  // namespace

LatticeGrid block_sum(const LatticeGrid& a, const LatticeGrid& b) {
    if (a.shape != b.shape) throw std::invalid_argument("shape mismatch");
    const CoeffRing& R = *a.pool->R;
    if (&R != b.pool->R) throw std::invalid_argument("ring mismatch");
    int n = a.pool->n + b.pool->n;
    const SubspacePool& pool = submodule_pool(R, n);
    LatticeGrid out;
    out.pool = &pool;
    out.shape = a.shape;
    for (size_t slot = 0; slot < a.cells.size(); ++slot) {
        Subspace left = embed_subspace(a.pool->subs[size_t(a.cells[slot])], n, 0);
        Subspace right = embed_subspace(b.pool->subs[size_t(b.cells[slot])], n, a.pool->n);
        int id = pool.find(subspace_sum(left, right));
        if (id < 0) throw internal_invariant_error("block sum missing from pool");
        out.cells.push_back(id);
    }
    return out;
}

SplitGrid block_sum(const SplitGrid& a, const SplitGrid& b) {
    if (a.shape != b.shape) throw std::invalid_argument("shape mismatch");
    const CoeffRing& R = *a.pool->R;
    if (&R != b.pool->R) throw std::invalid_argument("ring mismatch");
    int n = a.pool->n + b.pool->n;
    const SubspacePool& pool = submodule_pool(R, n);
    SplitGrid out;
    out.pool = &pool;
    out.shape = a.shape;
    for (size_t slot = 0; slot < a.parts.size(); ++slot) {
        Subspace left = embed_subspace(a.pool->subs[size_t(a.parts[slot])], n, 0);
        Subspace right = embed_subspace(b.pool->subs[size_t(b.parts[slot])], n, a.pool->n);
        int id = pool.find(subspace_sum(left, right));
        if (id < 0) throw internal_invariant_error("block sum missing from pool");
        out.parts.push_back(id);
    }
    return out;
}

LatticeGrid suspension_map(const LatticeGrid& g) {
    LatticeGrid out;
    out.pool = g.pool;
    out.shape.push_back(1);
    for (int p : g.shape) out.shape.push_back(p);
    long total = slot_count(out.shape, 1);
    int zid = g.pool->zero_id();
    for (long slot = 0; slot < total; ++slot) {
        auto a = coords_of(out.shape, slot, 1, 0);
        if (a[0] == 0) {
            out.cells.push_back(zid);
            continue;
        }
        std::vector<int> rest(a.begin() + 1, a.end());
        out.cells.push_back(g.cells[size_t(g.cell_slot(rest))]);
    }
    return out;
}

FiltrationCensus filtration_quotient_counts(const CoeffRing& R, int n, int k_plus_1, int p,
                                            int max_level, long cap) {
    if (k_plus_1 < 1 || p < 0) throw std::invalid_argument("bad filtration parameters");
    int k = k_plus_1 - 1;
    const SubspacePool& pool = submodule_pool(R, n);
    FiltrationCensus census;
    // ordered decompositions into p nonzero independent summands spanning R^n
    std::vector<std::vector<int>> decomps;
    {
        std::vector<int> cur;
        std::function<void(const Subspace&)> rec = [&](const Subspace& partial) {
            if (int(cur.size()) == p) {
                if (partial.is_full()) decomps.push_back(cur);
                return;
            }
            for (int id : pool.summands) {
                const Subspace& cand = pool.subs[size_t(id)];
                if (cand.is_zero()) continue;
                if (cand.size() * partial.size() > ambient_size(R, n)) continue;
                Subspace next = subspace_sum(partial, cand);
                if (next.size() != cand.size() * partial.size()) continue;
                cur.push_back(id);
                rec(next);
                cur.pop_back();
            }
        };
        rec(zero_subspace(R, n));
    }
    std::map<std::pair<int, std::vector<int>>, long> split_count;
    auto count_for = [&](int sub_id, const std::vector<int>& shape) {
        auto key = std::make_pair(sub_id, shape);
        auto it = split_count.find(key);
        if (it == split_count.end()) {
            long c = long(enumerate_splittings(R, n, pool.subs[size_t(sub_id)], shape, cap).size());
            it = split_count.emplace(key, c).first;
        }
        return it->second;
    };
    std::vector<int> level(size_t(k), 0);
    while (true) {
        std::vector<int> shape = level;
        shape.push_back(p);
        long lhs = 0;
        for (const auto& g : split_dk_level(R, n, k_plus_1, shape, cap)) {
            bool nondeg = true;
            for (int j = 1; j <= p && nondeg; ++j) {
                bool nonzero = false;
                long layer = slot_count(level, 0);
                for (long s = 0; s < layer && !nonzero; ++s) {
                    auto idx = coords_of(level, s, 0, 1);
                    idx.push_back(j);
                    nonzero = !pool.subs[size_t(g.parts[size_t(g.part_slot(idx))])].is_zero();
                }
                nondeg = nonzero;
            }
            if (nondeg) ++lhs;
        }
        long rhs = 0;
        for (const auto& d : decomps) {
            long prod = 1;
            for (int qid : d) prod *= count_for(qid, level);
            rhs += prod;
        }
        census.level_counts[level] = {lhs, rhs};
        census.matches = census.matches && lhs == rhs;
        int t = k - 1;
        while (t >= 0 && level[size_t(t)] == max_level) {
            level[size_t(t)] = 0;
            --t;
        }
        if (t < 0) break;
        ++level[size_t(t)];
    }
    return census;
}

}  // namespace stmod
