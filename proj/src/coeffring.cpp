#include "stmod/coeffring.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>

namespace stmod {

namespace {

bool is_prime(int p) {
    if (p < 2) return false;
    for (int d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

CoeffRing build_ring(CoeffRing::Kind kind, int p, int e) {
    if (!is_prime(p) || p > 31) throw unsupported_operation_error("unsupported characteristic");
    CoeffRing R;
    R.kind = kind;
    R.p = p;
    R.e = e;
    switch (kind) {
        case CoeffRing::Kind::prime_field:
            R.size = p;
            R.nilpotency = 1;
            R.pi = 0;
            R.name = "F" + std::to_string(p);
            break;
        case CoeffRing::Kind::local_z:
            R.size = 1;
            for (int i = 0; i < e; ++i) R.size *= p;
            R.nilpotency = e;
            R.pi = p % R.size;
            R.name = "Z/" + std::to_string(R.size);
            break;
        case CoeffRing::Kind::dual_numbers:
            R.size = p * p;
            R.e = 2;
            R.nilpotency = 2;
            R.pi = p;  // encodes x: a+bx <-> a + b*p
            R.name = "F" + std::to_string(p) + "[x]/(x2)";
            break;
    }
    if (R.size > 256) throw unsupported_operation_error("ring too large: " + R.name);
    const int n = R.size;
    R.add_t.resize(size_t(n) * n);
    R.mul_t.resize(size_t(n) * n);
    R.neg_t.resize(n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            int s, m;
            if (kind == CoeffRing::Kind::dual_numbers) {
                int xa = x % p, xb = x / p, ya = y % p, yb = y / p;
                s = (xa + ya) % p + ((xb + yb) % p) * p;
                m = (xa * ya) % p + ((xa * yb + xb * ya) % p) * p;
            } else {
                s = (x + y) % n;
                m = (x * y) % n;
            }
            R.add_t[size_t(x) * n + y] = uint8_t(s);
            R.mul_t[size_t(x) * n + y] = uint8_t(m);
        }
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (R.add(x, y) == 0) R.neg_t[x] = uint8_t(y);
    R.inv_t.assign(n, -1);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (R.mul(x, y) == 1) R.inv_t[x] = y;
    for (int x = 1; x < n; ++x)
        if (R.inv_t[x] >= 0) R.units.push_back(uint8_t(x));
    R.residue.resize(n);
    for (int x = 0; x < n; ++x)
        R.residue[x] = uint8_t(kind == CoeffRing::Kind::dual_numbers ? x % p : x % p);
    // val(x) = max k with x in (pi^k); val(0) = nilpotency
    R.vals.resize(n);
    for (int x = 0; x < n; ++x) {
        if (x == 0) {
            R.vals[x] = uint8_t(R.nilpotency);
            continue;
        }
        int v = 0;
        int pw = 1;
        for (int k = 1; k <= R.nilpotency; ++k) {
            pw = R.mul(pw, R.pi);
            bool in = false;
            for (int y = 0; y < n && !in; ++y)
                if (R.mul(pw, y) == x) in = true;
            if (in)
                v = k;
            else
                break;
        }
        R.vals[x] = uint8_t(v);
    }
    return R;
}

}  // namespace

int CoeffRing::inv(int a) const {
    if (inv_t[a] < 0) throw unsupported_operation_error("inverse of non-unit in " + name);
    return inv_t[a];
}

int CoeffRing::lift_int(long k) const {
    long m = k % p;
    if (m < 0) m += p;
    if (kind == Kind::local_z) {
        long mm = k % size;
        if (mm < 0) mm += size;
        return int(mm);
    }
    return int(m);  // fields and dual numbers embed Z through F_p
}

int CoeffRing::pi_pow(int k) const {
    int r = 1;
    for (int i = 0; i < k; ++i) r = mul(r, pi);
    return r;
}

std::string CoeffRing::elem_name(int a) const {
    if (kind != Kind::dual_numbers) return std::to_string(a);
    int c = a % p, b = a / p;
    if (b == 0) return std::to_string(c);
    std::string xs = b == 1 ? "x" : std::to_string(b) + "x";
    return c == 0 ? xs : std::to_string(c) + "+" + xs;
}

int CoeffRing::parse_elem(const std::string& s) const {
    for (int a = 0; a < size; ++a)
        if (elem_name(a) == s) return a;
    // fall back to plain integers reduced into the ring
    try {
        return lift_int(std::stol(s));
    } catch (...) {
        throw std::runtime_error("cannot parse ring element '" + s + "' in " + name);
    }
}

const CoeffRing& ring_from_descriptor(const std::string& desc) {
    static std::map<std::string, CoeffRing> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(desc);
    if (it != cache.end()) return it->second;

    std::string d = desc;
    if (d.rfind("Fq:", 0) == 0) d = "F" + d.substr(3);
    CoeffRing R;
    if (d.rfind("Z/", 0) == 0) {
        int m = std::stoi(d.substr(2));
        int p = 2;
        while (p <= m && m % p != 0) ++p;
        int e = 0, t = m;
        while (t % p == 0) {
            t /= p;
            ++e;
        }
        if (t != 1) throw unsupported_operation_error("Z/" + std::to_string(m) + " is not local");
        R = e == 1 ? build_ring(CoeffRing::Kind::prime_field, p, 1)
                   : build_ring(CoeffRing::Kind::local_z, p, e);
    } else if (auto pos = d.find("[x]/(x2)"); pos != std::string::npos && d[0] == 'F') {
        int p = std::stoi(d.substr(1, pos - 1));
        R = build_ring(CoeffRing::Kind::dual_numbers, p, 2);
    } else if (d[0] == 'F') {
        R = build_ring(CoeffRing::Kind::prime_field, std::stoi(d.substr(1)), 1);
    } else {
        throw std::runtime_error("unknown ring descriptor '" + desc + "'");
    }
    auto [ins, ok] = cache.emplace(desc, std::move(R));
    (void)ok;
    return ins->second;
}

RMat RMat::identity(const CoeffRing& ring, int n) {
    RMat m(ring, n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
}

RMat RMat::mul(const RMat& o) const {
    RMat r(*R, rows, o.cols);
    for (int i = 0; i < rows; ++i)
        for (int k = 0; k < cols; ++k) {
            int v = at(i, k);
            if (!v) continue;
            for (int j = 0; j < o.cols; ++j)
                r.at(i, j) = uint8_t(R->add(r.at(i, j), R->mul(v, o.at(k, j))));
        }
    return r;
}

RMat RMat::transpose() const {
    RMat r(*R, cols, rows);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) r.at(j, i) = at(i, j);
    return r;
}

std::string RMat::to_string() const {
    std::ostringstream os;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) os << (j ? "," : "") << R->elem_name(at(i, j));
        if (i + 1 < rows) os << ";";
    }
    return os.str();
}

RMat parse_rmat(const CoeffRing& R, const std::string& text, int n) {
    std::vector<std::vector<int>> rows;
    std::stringstream ss(text);
    std::string rowtext;
    while (std::getline(ss, rowtext, ';')) {
        std::vector<int> row;
        std::stringstream rs(rowtext);
        std::string cell;
        while (std::getline(rs, cell, ',')) row.push_back(R.parse_elem(cell));
        rows.push_back(row);
    }
    int r = n > 0 ? n : int(rows.size());
    int c = rows.empty() ? 0 : int(rows[0].size());
    RMat m(R, r, c);
    for (int i = 0; i < int(rows.size()); ++i) {
        if (int(rows[i].size()) != c) throw std::runtime_error("ragged matrix text");
        for (int j = 0; j < c; ++j) m.at(i, j) = uint8_t(rows[i][j]);
    }
    return m;
}

RrefResult rref(const RMat& m) {
    if (!m.R->is_field()) throw unsupported_operation_error("rref requires a field");
    const CoeffRing& R = *m.R;
    RMat w = m;
    std::vector<int> pivots;
    int r = 0;
    for (int c = 0; c < w.cols && r < w.rows; ++c) {
        int pr = -1;
        for (int i = r; i < w.rows; ++i)
            if (w.at(i, c)) {
                pr = i;
                break;
            }
        if (pr < 0) continue;
        for (int j = 0; j < w.cols; ++j) std::swap(w.a[size_t(r) * w.cols + j], w.a[size_t(pr) * w.cols + j]);
        int iv = R.inv(w.at(r, c));
        for (int j = 0; j < w.cols; ++j) w.at(r, j) = uint8_t(R.mul(iv, w.at(r, j)));
        for (int i = 0; i < w.rows; ++i) {
            if (i == r || !w.at(i, c)) continue;
            int f = w.at(i, c);
            for (int j = 0; j < w.cols; ++j)
                w.at(i, j) = uint8_t(R.sub(w.at(i, j), R.mul(f, w.at(r, j))));
        }
        pivots.push_back(c);
        ++r;
    }
    return {r, pivots, w};
}

int rank_field(const RMat& m) { return rref(m).rank; }

std::string IdealDesc::to_string() const {
    if (is_unit_ideal()) return "(1)";
    if (is_zero_ideal()) return "(0)";
    return "(pi^" + std::to_string(pi_power) + ")";
}

namespace {

// Minimal valuation over all k x k minors, computed by Laplace expansion with
// memoization on (row-prefix, column set). Returns nilpotency when all vanish.
struct MinorScan {
    const RMat& m;
    const CoeffRing& R;
    int k;
    std::vector<int> rows_, cols_;
    std::map<std::pair<int, uint32_t>, int> memo;  // (next row slot, col mask) -> element

    MinorScan(const RMat& mm, int kk) : m(mm), R(*mm.R), k(kk) {}

    int det(int slot, uint32_t colmask) {
        if (slot == k) return 1;
        auto key = std::make_pair(slot, colmask);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        int acc = 0, sgn = 1;
        for (int t = 0; t < k; ++t) {
            if (!(colmask & (1u << t))) continue;
            int entry = m.at(rows_[slot], cols_[t]);
            if (entry) {
                int sub = det(slot + 1, colmask & ~(1u << t));
                int term = R.mul(entry, sub);
                acc = sgn > 0 ? R.add(acc, term) : R.sub(acc, term);
            }
            sgn = -sgn;
        }
        memo[key] = acc;
        return acc;
    }
};

void choose(int n, int k, int start, std::vector<int>& cur, const std::function<void()>& emit) {
    if (int(cur.size()) == k) {
        emit();
        return;
    }
    for (int i = start; i <= n - (k - int(cur.size())); ++i) {
        cur.push_back(i);
        choose(n, k, i + 1, cur, emit);
        cur.pop_back();
    }
}

}  // namespace

IdealDesc fitting_ideal(const RMat& m, int s) {
    const CoeffRing& R = *m.R;
    const int t = m.rows;
    const int k = t - s;
    if (k <= 0) return {0, R.nilpotency};          // Fit_s = (1) for s >= t
    if (k > m.cols) return {R.nilpotency, R.nilpotency};  // no k x k minors: (0)
    if (k > 12) throw cap_exceeded_error("fitting_ideal minor size > 12");
    int best = R.nilpotency;
    std::vector<int> rows, cols;
    choose(t, k, 0, rows, [&] {
        choose(m.cols, k, 0, cols, [&] {
            MinorScan scan(m, k);
            scan.rows_ = rows;
            scan.cols_ = cols;
            uint32_t full = k == 32 ? ~0u : ((1u << k) - 1);
            int d = scan.det(0, full);
            best = std::min(best, int(R.val(d)));
        });
    });
    return {best, R.nilpotency};
}

std::optional<int> cokernel_projective_rank(const RMat& m) {
    const int t = m.rows;
    for (int d = 0; d <= t; ++d) {
        IdealDesc fd = fitting_ideal(m, d);
        if (!fd.is_unit_ideal()) continue;
        if (d == 0) return 0;
        IdealDesc fdm = fitting_ideal(m, d - 1);
        if (fdm.is_zero_ideal()) return d;
        return std::nullopt;  // Fit chain is monotone; first unit ideal decides
    }
    return std::nullopt;
}

std::vector<int> local_smith(const RMat& m, RMat* U, RMat* V) {
    const CoeffRing& R = *m.R;
    RMat w = m;
    if (U) *U = RMat::identity(R, m.rows);
    if (V) *V = RMat::identity(R, m.cols);
    std::vector<int> diag;
    int r0 = 0, c0 = 0;
    while (r0 < w.rows && c0 < w.cols) {
        int bi = -1, bj = -1, bv = R.nilpotency + 1;
        for (int i = r0; i < w.rows; ++i)
            for (int j = c0; j < w.cols; ++j)
                if (w.at(i, j) && R.val(w.at(i, j)) < bv) {
                    bv = R.val(w.at(i, j));
                    bi = i;
                    bj = j;
                }
        if (bi < 0) break;
        auto swap_rows = [&](RMat& x, int a, int b) {
            for (int j = 0; j < x.cols; ++j) std::swap(x.a[size_t(a) * x.cols + j], x.a[size_t(b) * x.cols + j]);
        };
        auto swap_cols = [&](RMat& x, int a, int b) {
            for (int i = 0; i < x.rows; ++i) std::swap(x.a[size_t(i) * x.cols + a], x.a[size_t(i) * x.cols + b]);
        };
        if (bi != r0) {
            swap_rows(w, bi, r0);
            if (U) swap_rows(*U, bi, r0);
        }
        if (bj != c0) {
            swap_cols(w, bj, c0);
            if (V) swap_cols(*V, bj, c0);
        }
        // pivot = u * pi^v with u a unit; normalize so pivot = pi^v
        int piv = w.at(r0, c0);
        int v = R.val(piv);
        int unit = 0;
        for (int u : R.units)
            if (R.mul(u, R.pi_pow(v)) == piv) {
                unit = u;
                break;
            }
        if (unit == 0) throw internal_invariant_error("pivot is not unit*pi^v in local ring");
        int iu = R.inv(unit);
        for (int j = 0; j < w.cols; ++j) w.at(r0, j) = uint8_t(R.mul(iu, w.at(r0, j)));
        if (U)
            for (int j = 0; j < U->cols; ++j) U->at(r0, j) = uint8_t(R.mul(iu, U->at(r0, j)));
        piv = w.at(r0, c0);
        // every other entry in the cross has valuation >= v, so divides exactly
        for (int i = r0 + 1; i < w.rows; ++i) {
            int b = w.at(i, c0);
            if (!b) continue;
            int q = 0;
            for (int cqq = 0; cqq < R.size; ++cqq)
                if (R.mul(cqq, piv) == b) {
                    q = cqq;
                    break;
                }
            for (int j = 0; j < w.cols; ++j)
                w.at(i, j) = uint8_t(R.sub(w.at(i, j), R.mul(q, w.at(r0, j))));
            if (U)
                for (int j = 0; j < U->cols; ++j)
                    U->at(i, j) = uint8_t(R.sub(U->at(i, j), R.mul(q, U->at(r0, j))));
        }
        for (int j = c0 + 1; j < w.cols; ++j) {
            int b = w.at(r0, j);
            if (!b) continue;
            int q = 0;
            for (int cqq = 0; cqq < R.size; ++cqq)
                if (R.mul(cqq, piv) == b) {
                    q = cqq;
                    break;
                }
            for (int i = 0; i < w.rows; ++i)
                w.at(i, j) = uint8_t(R.sub(w.at(i, j), R.mul(q, w.at(i, c0))));
            if (V)
                for (int i = 0; i < V->rows; ++i)
                    V->at(i, j) = uint8_t(R.sub(V->at(i, j), R.mul(q, V->at(i, c0))));
        }
        diag.push_back(v);
        ++r0;
        ++c0;
    }
    // min-valuation pivoting makes the diagonal valuations non-decreasing
    return diag;
}

std::optional<std::vector<uint8_t>> solve_left(const RMat& a, const std::vector<uint8_t>& b) {
    const CoeffRing& R = *a.R;
    if (int(b.size()) != a.cols) throw internal_invariant_error("solve_left shape mismatch");
    RMat U, V;
    auto diag = local_smith(a, &U, &V);
    // x a = b becomes y D = b V with y = x U^{-1}, D = U a V
    std::vector<uint8_t> c(size_t(a.cols), 0);
    for (int j = 0; j < a.cols; ++j) {
        int acc = 0;
        for (int i = 0; i < a.cols; ++i) acc = R.add(acc, R.mul(b[size_t(i)], V.at(i, j)));
        c[size_t(j)] = uint8_t(acc);
    }
    std::vector<uint8_t> y(size_t(a.rows), 0);
    for (int j = 0; j < a.cols; ++j) {
        if (j >= int(diag.size()) || j >= a.rows) {
            if (c[size_t(j)] != 0) return std::nullopt;
            continue;
        }
        int piv = R.pi_pow(diag[size_t(j)]);
        int found = -1;
        for (int t = 0; t < R.size; ++t)
            if (R.mul(t, piv) == c[size_t(j)]) {
                found = t;
                break;
            }
        if (found < 0) return std::nullopt;
        y[size_t(j)] = uint8_t(found);
    }
    std::vector<uint8_t> x(size_t(a.rows), 0);
    for (int j = 0; j < a.rows; ++j) {
        int acc = 0;
        for (int i = 0; i < a.rows; ++i) acc = R.add(acc, R.mul(y[size_t(i)], U.at(i, j)));
        x[size_t(j)] = uint8_t(acc);
    }
    return x;
}

SummandResult is_direct_summand(const CoeffRing& R, const std::vector<std::vector<int>>& gens,
                                int n) {
    // P = colspan(A) is a summand of R^n iff coker(A) is projective.
    RMat A(R, n, std::max<int>(1, int(gens.size())));
    for (int j = 0; j < int(gens.size()); ++j)
        for (int i = 0; i < n; ++i) A.at(i, j) = uint8_t(gens[j][i]);
    auto rk = cokernel_projective_rank(A);
    if (!rk) return {false, {}};
    // With U*A*V = diag(pi^{k_i}), colspan(A) = U^{-1} span{pi^{k_i} e_i}; a
    // complement is U^{-1} span{e_i : k_i > 0 or i beyond the diagonal}.
    RMat U;
    auto diag = local_smith(A, &U, nullptr);
    // Gauss-Jordan inversion of U; unit pivots always exist in an invertible
    // matrix over a local ring.
    RMat aug(R, n, 2 * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            aug.at(i, j) = U.at(i, j);
            aug.at(i, n + j) = uint8_t(i == j ? 1 : 0);
        }
    for (int c = 0; c < n; ++c) {
        int pr = -1;
        for (int i = c; i < n; ++i)
            if (R.is_unit(aug.at(i, c))) {
                pr = i;
                break;
            }
        if (pr < 0) throw internal_invariant_error("singular transform in is_direct_summand");
        for (int j = 0; j < 2 * n; ++j) std::swap(aug.a[size_t(c) * aug.cols + j], aug.a[size_t(pr) * aug.cols + j]);
        int iv = R.inv(aug.at(c, c));
        for (int j = 0; j < 2 * n; ++j) aug.at(c, j) = uint8_t(R.mul(iv, aug.at(c, j)));
        for (int i = 0; i < n; ++i) {
            if (i == c || !aug.at(i, c)) continue;
            int f = aug.at(i, c);
            for (int j = 0; j < 2 * n; ++j)
                aug.at(i, j) = uint8_t(R.sub(aug.at(i, j), R.mul(f, aug.at(c, j))));
        }
    }
    SummandResult out{true, {}};
    int rdiag = int(diag.size());
    for (int i = 0; i < n; ++i) {
        bool in_complement = i >= rdiag || diag[i] > 0;
        if (!in_complement) continue;
        std::vector<int> g(n);
        for (int r = 0; r < n; ++r) g[r] = aug.at(r, n + i);
        out.complement.push_back(std::move(g));
    }
    return out;
}

}  // namespace stmod
