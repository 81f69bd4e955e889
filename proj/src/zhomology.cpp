#include "stmod/zhomology.hpp"

#include <algorithm>
#include <set>

#include "stmod/par.hpp"

namespace stmod {

// ---------------------------------------------------------------------------
// SparseZMat

void SparseZMat::add(int i, int j, const Int& v) {
    if (v == 0) return;
    auto& row = data[size_t(i)];
    auto it = std::lower_bound(row.begin(), row.end(), j,
                               [](const auto& e, int c) { return e.first < c; });
    if (it != row.end() && it->first == j) {
        it->second += v;
        if (it->second == 0) row.erase(it);
    } else {
        row.insert(it, {j, v});
    }
}

Int SparseZMat::at(int i, int j) const {
    const auto& row = data[size_t(i)];
    auto it = std::lower_bound(row.begin(), row.end(), j,
                               [](const auto& e, int c) { return e.first < c; });
    if (it != row.end() && it->first == j) return it->second;
    return 0;
}

long SparseZMat::nnz() const {
    long n = 0;
    for (const auto& row : data) n += long(row.size());
    return n;
}

bool SparseZMat::is_zero() const { return nnz() == 0; }

SparseZMat SparseZMat::transpose() const {
    SparseZMat t(cols, rows);
    for (int i = 0; i < rows; ++i)
        for (const auto& [j, v] : data[size_t(i)]) t.data[size_t(j)].push_back({i, v});
    return t;  // rows visited in order, so each output row is already sorted
}

SparseZMat SparseZMat::mul(const SparseZMat& o) const {
    if (cols != o.rows) throw std::invalid_argument("sparse matrix product shape mismatch");
    SparseZMat r(rows, o.cols);
    std::map<int, Int> acc;
    for (int i = 0; i < rows; ++i) {
        acc.clear();
        for (const auto& [k, v] : data[size_t(i)])
            for (const auto& [j, w] : o.data[size_t(k)]) acc[j] += v * w;
        auto& row = r.data[size_t(i)];
        for (auto& [j, v] : acc)
            if (v != 0) row.push_back({j, std::move(v)});
    }
    return r;
}

std::vector<Int> SparseZMat::apply(const std::vector<Int>& x) const {
    if (int(x.size()) != cols) throw std::invalid_argument("sparse matrix apply shape mismatch");
    std::vector<Int> y(size_t(rows), Int(0));
    for (int i = 0; i < rows; ++i)
        for (const auto& [j, v] : data[size_t(i)]) y[size_t(i)] += v * x[size_t(j)];
    return y;
}

SparseZMat SparseZMat::from_dense(const std::vector<std::vector<long>>& d) {
    int r = int(d.size());
    int c = r ? int(d[0].size()) : 0;
    SparseZMat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            if (d[size_t(i)][size_t(j)]) m.data[size_t(i)].push_back({j, Int(d[size_t(i)][size_t(j)])});
    return m;
}

json SparseZMat::to_json() const {
    json entries = json::array();
    for (int i = 0; i < rows; ++i)
        for (const auto& [j, v] : data[size_t(i)])
            entries.push_back(json::array({i, j, v.get_str()}));
    return json{{"rows", rows}, {"cols", cols}, {"entries", entries}};
}

SparseZMat SparseZMat::from_json(const json& j) {
    SparseZMat m(j.at("rows").get<int>(), j.at("cols").get<int>());
    for (const auto& e : j.at("entries"))
        m.add(e.at(0).get<int>(), e.at(1).get<int>(), Int(e.at(2).get<std::string>()));
    return m;
}

// ---------------------------------------------------------------------------
// Smith normal form

namespace {

using Row = std::vector<std::pair<int, Int>>;

// y_row_a += t * y_row_b modeled on the sorted-vector representation.
Row merge_rows(const Row& a, const Int& t, const Row& b) {
    Row out;
    out.reserve(a.size() + b.size());
    size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].first < a[i].first) {
            Int v = t * b[j].second;
            if (v != 0) out.push_back({b[j].first, std::move(v)});
            ++j;
        } else {
            Int v = a[i].second + t * b[j].second;
            if (v != 0) out.push_back({a[i].first, std::move(v)});
            ++i;
            ++j;
        }
    }
    return out;
}

struct SmithWorker {
    const int R, C;
    const bool record;
    std::vector<Row> rows;
    std::vector<long> col_count;
    std::vector<std::set<int>> col_rows;
    std::vector<int> q_single_col, q_single_row;
    SnfResult out;
    int k = 0;  // next diagonal slot

    SmithWorker(const SparseZMat& m, bool want_transforms)
        : R(m.rows), C(m.cols), record(want_transforms), rows(m.data),
          col_count(size_t(m.cols), 0), col_rows(size_t(m.cols)) {
        out.src_rows = R;
        out.src_cols = C;
        out.has_transforms = want_transforms;
        for (int i = 0; i < R; ++i)
            for (const auto& [j, v] : rows[size_t(i)]) {
                (void)v;
                ++col_count[size_t(j)];
                col_rows[size_t(j)].insert(i);
            }
        for (int j = 0; j < C; ++j)
            if (col_count[size_t(j)] == 1) q_single_col.push_back(j);
        for (int i = 0; i < R; ++i)
            if (rows[size_t(i)].size() == 1) q_single_row.push_back(i);
    }

    void rec_row(int kind, int a, int b, Int t = 0) {
        if (record) out.row_ops.push_back({kind, a, b, std::move(t)});
    }
    void rec_col(int kind, int a, int b, Int t = 0) {
        if (record) out.col_ops.push_back({kind, a, b, std::move(t)});
    }

    void set_row(int i, Row next) {
        for (const auto& [c, v] : rows[size_t(i)]) {
            (void)v;
            --col_count[size_t(c)];
            col_rows[size_t(c)].erase(i);
            if (col_count[size_t(c)] == 1) q_single_col.push_back(c);
        }
        for (const auto& [c, v] : next) {
            (void)v;
            ++col_count[size_t(c)];
            col_rows[size_t(c)].insert(i);
            if (col_count[size_t(c)] == 1) q_single_col.push_back(c);
        }
        rows[size_t(i)] = std::move(next);
        if (rows[size_t(i)].size() == 1) q_single_row.push_back(i);
    }

    void swap_rows(int a, int b) {
        if (a == b) return;
        for (const auto& [c, v] : rows[size_t(a)]) {
            (void)v;
            col_rows[size_t(c)].erase(a);
        }
        for (const auto& [c, v] : rows[size_t(b)]) {
            (void)v;
            col_rows[size_t(c)].erase(b);
        }
        std::swap(rows[size_t(a)], rows[size_t(b)]);
        for (const auto& [c, v] : rows[size_t(a)]) {
            (void)v;
            col_rows[size_t(c)].insert(a);
        }
        for (const auto& [c, v] : rows[size_t(b)]) {
            (void)v;
            col_rows[size_t(c)].insert(b);
        }
        rec_row(0, a, b);
    }

    void swap_cols(int a, int b) {
        if (a == b) return;
        std::vector<int> affected(col_rows[size_t(a)].begin(), col_rows[size_t(a)].end());
        for (int i : col_rows[size_t(b)])
            if (!col_rows[size_t(a)].count(i)) affected.push_back(i);
        for (int i : affected) {
            Row& row = rows[size_t(i)];
            Int va = 0, vb = 0;
            auto find = [&](int c) {
                return std::lower_bound(row.begin(), row.end(), c,
                                        [](const auto& e, int cc) { return e.first < cc; });
            };
            auto ita = find(a);
            if (ita != row.end() && ita->first == a) {
                va = ita->second;
                row.erase(ita);
            }
            auto itb = find(b);
            if (itb != row.end() && itb->first == b) {
                vb = itb->second;
                row.erase(itb);
            }
            if (vb != 0) row.insert(find(a), {a, std::move(vb)});
            if (va != 0) row.insert(find(b), {b, std::move(va)});
        }
        std::swap(col_count[size_t(a)], col_count[size_t(b)]);
        std::swap(col_rows[size_t(a)], col_rows[size_t(b)]);
        rec_col(0, a, b);
    }

    void negate_row(int i) {
        for (auto& [c, v] : rows[size_t(i)]) {
            (void)c;
            v = -v;
        }
        rec_row(1, i, i);
    }

    // pivot candidate (i, j) with |entry| == 1 in the active block, or i < 0
    std::pair<int, int> pick_unit_pivot() {
        while (!q_single_col.empty()) {
            int j = q_single_col.back();
            q_single_col.pop_back();
            if (j < k || col_count[size_t(j)] != 1) continue;
            int i = *col_rows[size_t(j)].begin();
            Int val = 0;
            for (const auto& [c, w] : rows[size_t(i)])
                if (c == j) val = w;
            if (val == 1 || val == -1) return {i, j};
        }
        while (!q_single_row.empty()) {
            int i = q_single_row.back();
            q_single_row.pop_back();
            if (i < k || rows[size_t(i)].size() != 1) continue;
            const auto& [j, v] = rows[size_t(i)][0];
            if (j >= k && (v == 1 || v == -1)) return {i, j};
        }
        long best_cost = -1;
        int bi = -1, bj = -1;
        for (int i = k; i < R; ++i)
            for (const auto& [j, v] : rows[size_t(i)]) {
                if (j < k || (v != 1 && v != -1)) continue;
                long cost = (long(rows[size_t(i)].size()) - 1) * (col_count[size_t(j)] - 1);
                if (best_cost < 0 || cost < best_cost) {
                    best_cost = cost;
                    bi = i;
                    bj = j;
                    if (cost == 0) return {bi, bj};
                }
            }
        return {bi, bj};
    }

    void unit_phase() {
        while (k < R && k < C) {
            auto [i, j] = pick_unit_pivot();
            if (i < 0) break;
            swap_rows(i, k);
            swap_cols(j, k);
            Int piv = 0;
            for (const auto& [c, v] : rows[size_t(k)])
                if (c == k) piv = v;
            if (piv == -1) negate_row(k);
            // clear column k with row operations; batch applied in parallel,
            // recorded and committed in ascending row order for determinism
            std::vector<int> targets;
            for (int r : col_rows[size_t(k)])
                if (r != k) targets.push_back(r);
            std::sort(targets.begin(), targets.end());
            if (!targets.empty()) {
                const Row& pivot_row = rows[size_t(k)];
                std::vector<Int> ts(targets.size());
                for (size_t s = 0; s < targets.size(); ++s) {
                    Int v = 0;
                    for (const auto& [c, w] : rows[size_t(targets[s])])
                        if (c == k) v = w;
                    ts[s] = -v;
                }
                auto merged = par::map_index<Row>(targets.size(), [&](size_t s) {
                    return merge_rows(rows[size_t(targets[s])], ts[s], pivot_row);
                });
                for (size_t s = 0; s < targets.size(); ++s) {
                    rec_row(2, targets[s], k, ts[s]);
                    set_row(targets[s], std::move(merged[s]));
                }
            }
            // clear row k with column operations; only row k holds column k
            for (const auto& [j2, w] : rows[size_t(k)])
                if (j2 != k) rec_col(2, j2, k, -w);
            set_row(k, Row{{k, Int(1)}});
            out.factors.push_back(1);
            ++k;
        }
    }

    void dense_phase() {
        const int m = R - k, n = C - k;
        if (m <= 0 || n <= 0) return;
        std::vector<std::vector<Int>> D(size_t(m), std::vector<Int>(size_t(n), Int(0)));
        bool any = false;
        for (int i = k; i < R; ++i)
            for (const auto& [j, v] : rows[size_t(i)]) {
                if (j < k) throw internal_invariant_error("entry outside active block");
                D[size_t(i - k)][size_t(j - k)] = v;
                any = true;
            }
        if (!any) return;
        auto drow = [&](int i, const Int& q, int src) {  // row i -= q * row src
            for (int j = 0; j < n; ++j) D[size_t(i)][size_t(j)] -= q * D[size_t(src)][size_t(j)];
            rec_row(2, k + i, k + src, -q);
        };
        auto dcol = [&](int j, const Int& q, int src) {
            for (int i = 0; i < m; ++i) D[size_t(i)][size_t(j)] -= q * D[size_t(i)][size_t(src)];
            rec_col(2, k + j, k + src, -q);
        };
        int s = 0;
        while (s < m && s < n) {
            int bi = -1, bj = -1;
            for (int i = s; i < m; ++i)
                for (int j = s; j < n; ++j) {
                    if (D[size_t(i)][size_t(j)] == 0) continue;
                    if (bi < 0 || mpz_cmpabs(D[size_t(i)][size_t(j)].get_mpz_t(),
                                             D[size_t(bi)][size_t(bj)].get_mpz_t()) < 0) {
                        bi = i;
                        bj = j;
                    }
                }
            if (bi < 0) break;
            if (bi != s) {
                std::swap(D[size_t(bi)], D[size_t(s)]);
                rec_row(0, k + bi, k + s);
            }
            if (bj != s) {
                for (int i = 0; i < m; ++i) std::swap(D[size_t(i)][size_t(bj)], D[size_t(i)][size_t(s)]);
                rec_col(0, k + bj, k + s);
            }
            while (true) {
                if (D[size_t(s)][size_t(s)] < 0) {
                    for (int j = 0; j < n; ++j) D[size_t(s)][size_t(j)] = -D[size_t(s)][size_t(j)];
                    rec_row(1, k + s, k + s);
                }
                bool bounced = false;
                for (int i = s + 1; i < m; ++i) {
                    if (D[size_t(i)][size_t(s)] == 0) continue;
                    Int q;
                    mpz_tdiv_q(q.get_mpz_t(), D[size_t(i)][size_t(s)].get_mpz_t(),
                               D[size_t(s)][size_t(s)].get_mpz_t());
                    if (q != 0) drow(i, q, s);
                    if (D[size_t(i)][size_t(s)] != 0) {
                        std::swap(D[size_t(i)], D[size_t(s)]);
                        rec_row(0, k + i, k + s);
                        bounced = true;
                        break;
                    }
                }
                if (bounced) continue;
                for (int j = s + 1; j < n; ++j) {
                    if (D[size_t(s)][size_t(j)] == 0) continue;
                    Int q;
                    mpz_tdiv_q(q.get_mpz_t(), D[size_t(s)][size_t(j)].get_mpz_t(),
                               D[size_t(s)][size_t(s)].get_mpz_t());
                    if (q != 0) dcol(j, q, s);
                    if (D[size_t(s)][size_t(j)] != 0) {
                        for (int i = 0; i < m; ++i)
                            std::swap(D[size_t(i)][size_t(j)], D[size_t(i)][size_t(s)]);
                        rec_col(0, k + j, k + s);
                        bounced = true;
                        break;
                    }
                }
                if (bounced) continue;
                bool cross_clean = true;
                for (int i = s + 1; i < m && cross_clean; ++i)
                    if (D[size_t(i)][size_t(s)] != 0) cross_clean = false;
                for (int j = s + 1; j < n && cross_clean; ++j)
                    if (D[size_t(s)][size_t(j)] != 0) cross_clean = false;
                if (!cross_clean) continue;
                int fi = -1;
                for (int i = s + 1; i < m && fi < 0; ++i)
                    for (int j = s + 1; j < n; ++j)
                        if (!mpz_divisible_p(D[size_t(i)][size_t(j)].get_mpz_t(),
                                             D[size_t(s)][size_t(s)].get_mpz_t())) {
                            fi = i;
                            break;
                        }
                if (fi >= 0) {
                    for (int j = 0; j < n; ++j) D[size_t(s)][size_t(j)] += D[size_t(fi)][size_t(j)];
                    rec_row(2, k + s, k + fi, 1);
                    continue;
                }
                break;
            }
            out.factors.push_back(D[size_t(s)][size_t(s)]);
            ++s;
        }
    }
};

}  // namespace

SnfResult smith(const SparseZMat& m, bool want_transforms) {
    SmithWorker w(m, want_transforms);
    w.unit_phase();
    w.dense_phase();
    return std::move(w.out);
}

std::vector<Int> SnfResult::apply_row_ops(std::vector<Int> y) const {
    if (!has_transforms) throw internal_invariant_error("snf computed without transforms");
    if (int(y.size()) != src_rows) throw std::invalid_argument("row transform length mismatch");
    for (const Op& op : row_ops) {
        if (op.kind == 0)
            std::swap(y[size_t(op.a)], y[size_t(op.b)]);
        else if (op.kind == 1)
            y[size_t(op.a)] = -y[size_t(op.a)];
        else
            y[size_t(op.a)] += op.t * y[size_t(op.b)];
    }
    return y;
}

std::vector<Int> SnfResult::apply_col_ops(std::vector<Int> w) const {
    if (!has_transforms) throw internal_invariant_error("snf computed without transforms");
    if (int(w.size()) != src_cols) throw std::invalid_argument("col transform length mismatch");
    for (auto it = col_ops.rbegin(); it != col_ops.rend(); ++it) {
        const Op& op = *it;
        if (op.kind == 0)
            std::swap(w[size_t(op.a)], w[size_t(op.b)]);
        else if (op.kind == 1)
            w[size_t(op.a)] = -w[size_t(op.a)];
        else
            w[size_t(op.b)] += op.t * w[size_t(op.a)];
    }
    return w;
}

std::vector<Int> SnfResult::col_of_v(int i) const {
    std::vector<Int> e(size_t(src_cols), Int(0));
    e[size_t(i)] = 1;
    return apply_col_ops(std::move(e));
}

SparseZMat SnfResult::U() const {
    if (!has_transforms) throw internal_invariant_error("snf computed without transforms");
    std::vector<Row> rows(static_cast<size_t>(src_rows));
    for (int i = 0; i < src_rows; ++i) rows[size_t(i)] = {{i, Int(1)}};
    for (const Op& op : row_ops) {
        if (op.kind == 0)
            std::swap(rows[size_t(op.a)], rows[size_t(op.b)]);
        else if (op.kind == 1)
            for (auto& [c, v] : rows[size_t(op.a)]) {
                (void)c;
                v = -v;
            }
        else
            rows[size_t(op.a)] = merge_rows(rows[size_t(op.a)], op.t, rows[size_t(op.b)]);
    }
    SparseZMat u(src_rows, src_rows);
    u.data = std::move(rows);
    return u;
}

SparseZMat SnfResult::V() const {
    SparseZMat v(src_cols, src_cols);
    for (int j = 0; j < src_cols; ++j) {
        auto col = col_of_v(j);
        for (int i = 0; i < src_cols; ++i)
            if (col[size_t(i)] != 0) v.data[size_t(i)].push_back({j, col[size_t(i)]});
    }
    return v;
}

LinearSolver::LinearSolver(SparseZMat m) : snf_(smith(m, true)) {}

std::optional<std::vector<Int>> LinearSolver::solve(const std::vector<Int>& b) const {
    auto y = snf_.apply_row_ops(b);
    std::vector<Int> w(size_t(snf_.src_cols), Int(0));
    for (int i = 0; i < snf_.src_rows; ++i) {
        if (i < snf_.rank()) {
            if (!mpz_divisible_p(y[size_t(i)].get_mpz_t(), snf_.factors[size_t(i)].get_mpz_t()))
                return std::nullopt;
            w[size_t(i)] = y[size_t(i)] / snf_.factors[size_t(i)];
        } else if (y[size_t(i)] != 0) {
            return std::nullopt;
        }
    }
    return snf_.apply_col_ops(std::move(w));
}

std::vector<std::vector<Int>> kernel_basis(const SparseZMat& m) {
    auto s = smith(m, true);
    std::vector<std::vector<Int>> basis;
    for (int i = s.rank(); i < m.cols; ++i) basis.push_back(s.col_of_v(i));
    return basis;
}

std::vector<std::vector<Int>> kernel_basis_mod(const SparseZMat& m, long p) {
    if (p < 2) throw std::invalid_argument("kernel_basis_mod needs a prime modulus");
    auto inv_mod = [&](long a) {
        long t = 0, nt = 1, r = p, nr = a % p;
        while (nr != 0) {
            long q = r / nr;
            t -= q * nt;
            std::swap(t, nt);
            r -= q * nr;
            std::swap(r, nr);
        }
        return ((t % p) + p) % p;
    };
    std::vector<std::vector<long>> a(size_t(m.rows), std::vector<long>(size_t(m.cols), 0));
    for (int i = 0; i < m.rows; ++i)
        for (const auto& [j, v] : m.data[size_t(i)])
            a[size_t(i)][size_t(j)] = long(mpz_fdiv_ui(v.get_mpz_t(), static_cast<unsigned long>(p)));
    std::vector<int> pivot_cols;
    int r = 0;
    for (int j = 0; j < m.cols && r < m.rows; ++j) {
        int piv = -1;
        for (int i = r; i < m.rows; ++i)
            if (a[size_t(i)][size_t(j)]) {
                piv = i;
                break;
            }
        if (piv < 0) continue;
        std::swap(a[size_t(r)], a[size_t(piv)]);
        long iv = inv_mod(a[size_t(r)][size_t(j)]);
        for (int t = j; t < m.cols; ++t) a[size_t(r)][size_t(t)] = a[size_t(r)][size_t(t)] * iv % p;
        for (int i = 0; i < m.rows; ++i) {
            if (i == r || a[size_t(i)][size_t(j)] == 0) continue;
            long f = p - a[size_t(i)][size_t(j)];
            for (int t = j; t < m.cols; ++t)
                a[size_t(i)][size_t(t)] = (a[size_t(i)][size_t(t)] + f * a[size_t(r)][size_t(t)]) % p;
        }
        pivot_cols.push_back(j);
        ++r;
    }
    std::vector<int> pivot_of(size_t(m.cols), -1);
    for (int i = 0; i < r; ++i) pivot_of[size_t(pivot_cols[size_t(i)])] = i;
    std::vector<std::vector<Int>> out;
    for (int j = 0; j < m.cols; ++j) {
        if (pivot_of[size_t(j)] >= 0) continue;
        std::vector<Int> v(size_t(m.cols), Int(0));
        v[size_t(j)] = 1;
        for (int i = 0; i < r; ++i) {
            long c = a[size_t(i)][size_t(j)];
            if (c) v[size_t(pivot_cols[size_t(i)])] = p - c;
        }
        out.push_back(std::move(v));
    }
    return out;
}

long rank_mod(const SparseZMat& m, long p) {
    if (p < 2) throw std::invalid_argument("rank_mod needs a prime modulus");
    auto inv_mod = [&](long a) {
        long t = 0, nt = 1, r = p, nr = a % p;
        while (nr != 0) {
            long q = r / nr;
            t -= q * nt;
            std::swap(t, nt);
            r -= q * nr;
            std::swap(r, nr);
        }
        return ((t % p) + p) % p;
    };
    using PRow = std::vector<std::pair<int, long>>;
    std::map<int, PRow> pivots;  // leading column -> normalized row
    long rank = 0;
    for (int i = 0; i < m.rows; ++i) {
        PRow row;
        for (const auto& [j, v] : m.data[size_t(i)]) {
            long r = mpz_fdiv_ui(v.get_mpz_t(), static_cast<unsigned long>(p));
            if (r) row.push_back({j, r});
        }
        while (!row.empty()) {
            auto it = pivots.find(row[0].first);
            if (it == pivots.end()) break;
            long f = p - row[0].second;  // row += f * pivot_row clears the lead
            PRow next;
            size_t a = 0, b = 0;
            const PRow& pr = it->second;
            while (a < row.size() || b < pr.size()) {
                if (b == pr.size() || (a < row.size() && row[a].first < pr[b].first)) {
                    next.push_back(row[a++]);
                } else if (a == row.size() || pr[b].first < row[a].first) {
                    long v = (f * pr[b].second) % p;
                    if (v) next.push_back({pr[b].first, v});
                    ++b;
                } else {
                    long v = (row[a].second + f * pr[b].second) % p;
                    if (v) next.push_back({row[a].first, v});
                    ++a;
                    ++b;
                }
            }
            row = std::move(next);
        }
        if (row.empty()) continue;
        long iv = inv_mod(row[0].second);
        for (auto& [c, v] : row) {
            (void)c;
            v = (v * iv) % p;
        }
        pivots[row[0].first] = std::move(row);
        ++rank;
    }
    return rank;
}

// ---------------------------------------------------------------------------
// AbGroup and cokernels

std::string AbGroup::to_string() const {
    if (is_zero()) return "0";
    std::string s;
    auto append = [&](const std::string& part) {
        if (!s.empty()) s += " + ";
        s += part;
    };
    if (free_rank == 1)
        append("Z");
    else if (free_rank > 1)
        append("Z^" + std::to_string(free_rank));
    for (const auto& t : torsion) append("Z/" + t.get_str());
    return s;
}

json AbGroup::to_json() const {
    json t = json::array();
    for (const auto& x : torsion) t.push_back(x.get_str());
    return json{{"free_rank", free_rank}, {"torsion", t}};
}

AbGroup cokernel(const SparseZMat& m) {
    auto s = smith(m, false);
    AbGroup g;
    g.free_rank = m.rows - s.rank();
    for (const auto& f : s.factors)
        if (f > 1) g.torsion.push_back(f);
    return g;
}

PresentedCokernel presentation_cokernel(int gens, const SparseZMat& rels, bool want_gen_images) {
    if (rels.cols != gens) throw std::invalid_argument("relation matrix has wrong width");
    SparseZMat a = rels.transpose();  // gens x rels, relations as columns
    auto s = smith(a, want_gen_images);
    PresentedCokernel out;
    out.group.free_rank = gens - s.rank();
    std::vector<int> torsion_slots;
    for (int i = 0; i < s.rank(); ++i)
        if (s.factors[size_t(i)] > 1) {
            torsion_slots.push_back(i);
            out.group.torsion.push_back(s.factors[size_t(i)]);
        }
    if (!want_gen_images) return out;
    for (int j = 0; j < gens; ++j) {
        std::vector<Int> e(size_t(gens), Int(0));
        e[size_t(j)] = 1;
        auto y = s.apply_row_ops(std::move(e));
        std::vector<Int> coords;
        for (int i : torsion_slots) {
            Int c;
            mpz_fdiv_r(c.get_mpz_t(), y[size_t(i)].get_mpz_t(), s.factors[size_t(i)].get_mpz_t());
            coords.push_back(std::move(c));
        }
        for (int i = s.rank(); i < gens; ++i) coords.push_back(y[size_t(i)]);
        out.gen_images.push_back(std::move(coords));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Chain complexes

long ChainComplex::dim(int d) const {
    auto it = labels.find(d);
    return it == labels.end() ? 0 : long(it->second.size());
}

int ChainComplex::min_degree() const {
    for (const auto& [d, l] : labels)
        if (!l.empty()) return d;
    return 0;
}

int ChainComplex::max_degree() const {
    int m = min_degree() - 1;
    for (const auto& [d, l] : labels)
        if (!l.empty()) m = d;
    return m;
}

const SparseZMat* ChainComplex::differential(int d) const {
    auto it = diff.find(d);
    return it == diff.end() ? nullptr : &it->second;
}

void ChainComplex::set_labels(int d, std::vector<std::string> l) { labels[d] = std::move(l); }

void ChainComplex::set_diff(int d, SparseZMat m) {
    if (m.cols != dim(d) || m.rows != dim(d - 1))
        throw malformed_complex_error("differential shape does not match basis sizes at degree " +
                                      std::to_string(d));
    diff[d] = std::move(m);
}

void ChainComplex::verify() const {
    for (const auto& [d, m] : diff) {
        if (m.cols != dim(d) || m.rows != dim(d - 1))
            throw malformed_complex_error("differential shape mismatch at degree " +
                                          std::to_string(d));
        auto up = diff.find(d + 1);
        if (up != diff.end() && !m.mul(up->second).is_zero())
            throw malformed_complex_error("d∘d != 0 between degrees " + std::to_string(d + 1) +
                                          " and " + std::to_string(d - 1));
    }
}

long ChainComplex::euler_characteristic() const {
    long chi = 0;
    for (const auto& [d, l] : labels) chi += (d % 2 == 0 ? 1 : -1) * long(l.size());
    return chi;
}

json ChainComplex::to_json() const {
    json jl = json::object(), jd = json::object();
    for (const auto& [d, l] : labels) jl[std::to_string(d)] = l;
    for (const auto& [d, m] : diff) jd[std::to_string(d)] = m.to_json();
    return json{{"schema", "chain-complex/1"}, {"labels", jl}, {"diffs", jd}};
}

ChainComplex ChainComplex::from_json(const json& j) {
    if (j.at("schema").get<std::string>() != "chain-complex/1")
        throw std::runtime_error("unknown chain complex schema");
    ChainComplex cc;
    for (const auto& [k, v] : j.at("labels").items())
        cc.set_labels(std::stoi(k), v.get<std::vector<std::string>>());
    for (const auto& [k, v] : j.at("diffs").items()) cc.set_diff(std::stoi(k), SparseZMat::from_json(v));
    return cc;
}

AbGroup homology(const ChainComplex& cc, int d, Coeffs c) {
    long cd = cc.dim(d);
    if (cd == 0) return {};
    const SparseZMat* down = cc.differential(d);
    const SparseZMat* up = cc.differential(d + 1);
    if (down && up && !down->mul(*up).is_zero())
        throw malformed_complex_error("d∘d != 0 at degree " + std::to_string(d));
    if (c.kind == Coeffs::Kind::mod_p) {
        long r1 = down ? rank_mod(*down, c.p) : 0;
        long r2 = up ? rank_mod(*up, c.p) : 0;
        return {cd - r1 - r2, {}};
    }
    long r1 = down ? smith(*down, false).rank() : 0;
    if (c.kind == Coeffs::Kind::rational) {
        long r2 = up ? smith(*up, false).rank() : 0;
        return {cd - r1 - r2, {}};
    }
    AbGroup h;
    if (!up) {
        h.free_rank = cd - r1;
        return h;
    }
    auto s = smith(*up, false);
    h.free_rank = cd - r1 - s.rank();
    for (const auto& f : s.factors)
        if (f > 1) h.torsion.push_back(f);
    return h;
}

// ---------------------------------------------------------------------------
// Bicomplexes

long Bicomplex::dim(int p, int q) const {
    auto it = labels.find({p, q});
    return it == labels.end() ? 0 : long(it->second.size());
}

void Bicomplex::verify() const {
    auto get = [&](const std::map<std::pair<int, int>, SparseZMat>& m, int p,
                   int q) -> const SparseZMat* {
        auto it = m.find({p, q});
        return it == m.end() ? nullptr : &it->second;
    };
    for (const auto& [pq, m] : dh) {
        auto [p, q] = pq;
        if (m.cols != dim(p, q) || m.rows != dim(p - 1, q))
            throw malformed_complex_error("horizontal differential shape mismatch");
        if (const SparseZMat* next = get(dh, p - 1, q); next && !next->mul(m).is_zero())
            throw malformed_complex_error("horizontal differential does not square to zero");
    }
    for (const auto& [pq, m] : dv) {
        auto [p, q] = pq;
        if (m.cols != dim(p, q) || m.rows != dim(p, q - 1))
            throw malformed_complex_error("vertical differential shape mismatch");
        if (const SparseZMat* next = get(dv, p, q - 1); next && !next->mul(m).is_zero())
            throw malformed_complex_error("vertical differential does not square to zero");
    }
    for (const auto& [pq, l] : labels) {
        if (l.empty()) continue;
        auto [p, q] = pq;
        const SparseZMat* h = get(dh, p, q);
        const SparseZMat* v = get(dv, p, q);
        const SparseZMat* vh = get(dv, p - 1, q);
        const SparseZMat* hv = get(dh, p, q - 1);
        SparseZMat a(int(dim(p - 1, q - 1)), int(dim(p, q)));
        SparseZMat b = a;
        if (h && vh) a = vh->mul(*h);
        if (v && hv) b = hv->mul(*v);
        if (!(a == b)) throw malformed_complex_error("bicomplex differentials do not commute");
    }
}

ChainComplex total_complex(const Bicomplex& bc) {
    bc.verify();
    // basis at total degree n: blocks (p, q) with p+q = n, ascending p
    std::map<int, std::vector<std::pair<int, int>>> blocks;
    for (const auto& [pq, l] : bc.labels)
        if (!l.empty()) blocks[pq.first + pq.second].push_back(pq);
    std::map<std::pair<int, int>, long> offset;
    ChainComplex cc;
    for (auto& [n, bs] : blocks) {
        std::sort(bs.begin(), bs.end());
        std::vector<std::string> lab;
        for (const auto& pq : bs) {
            offset[pq] = long(lab.size());
            for (const auto& s : bc.labels.at(pq))
                lab.push_back(std::to_string(pq.first) + "," + std::to_string(pq.second) + "|" + s);
        }
        cc.set_labels(n, std::move(lab));
    }
    for (const auto& [n, bs] : blocks) {
        if (cc.dim(n - 1) == 0 && blocks.find(n - 1) == blocks.end()) continue;
        SparseZMat d(int(cc.dim(n - 1)), int(cc.dim(n)));
        for (const auto& pq : bs) {
            auto [p, q] = pq;
            long src = offset.at(pq);
            if (auto it = bc.dh.find(pq); it != bc.dh.end() && bc.dim(p - 1, q) > 0) {
                long dst = offset.at({p - 1, q});
                const SparseZMat& m = it->second;
                for (int i = 0; i < m.rows; ++i)
                    for (const auto& [j, v] : m.data[size_t(i)])
                        d.add(int(dst) + i, int(src) + j, v);
            }
            if (auto it = bc.dv.find(pq); it != bc.dv.end() && bc.dim(p, q - 1) > 0) {
                long dst = offset.at({p, q - 1});
                const SparseZMat& m = it->second;
                int sign = p % 2 == 0 ? 1 : -1;
                for (int i = 0; i < m.rows; ++i)
                    for (const auto& [j, v] : m.data[size_t(i)])
                        d.add(int(dst) + i, int(src) + j, sign * v);
            }
        }
        cc.set_diff(n, std::move(d));
    }
    cc.verify();
    return cc;
}

Bicomplex tensor_bicomplex(const ChainComplex& a, const ChainComplex& b) {
    Bicomplex bc;
    for (const auto& [p, la] : a.labels) {
        if (la.empty()) continue;
        for (const auto& [q, lb] : b.labels) {
            if (lb.empty()) continue;
            std::vector<std::string> lab;
            for (const auto& x : la)
                for (const auto& y : lb) lab.push_back(x + "(x)" + y);
            bc.labels[{p, q}] = std::move(lab);
        }
    }
    for (const auto& [pq, l] : bc.labels) {
        (void)l;
        auto [p, q] = pq;
        long na = a.dim(p), nb = b.dim(q);
        if (const SparseZMat* da = a.differential(p); da && a.dim(p - 1) > 0 && nb > 0) {
            SparseZMat dh(int(a.dim(p - 1) * nb), int(na * nb));
            for (int i = 0; i < da->rows; ++i)
                for (const auto& [j, v] : da->data[size_t(i)])
                    for (long t = 0; t < nb; ++t) dh.add(int(i * nb + t), int(j * nb + t), v);
            bc.dh[pq] = std::move(dh);
        }
        if (const SparseZMat* db = b.differential(q); db && b.dim(q - 1) > 0 && na > 0) {
            long nbm = b.dim(q - 1);
            SparseZMat dv(int(na * nbm), int(na * nb));
            for (int i = 0; i < db->rows; ++i)
                for (const auto& [j, v] : db->data[size_t(i)])
                    for (long t = 0; t < na; ++t) dv.add(int(t * nbm + i), int(t * nb + j), v);
            bc.dv[pq] = std::move(dv);
        }
    }
    return bc;
}

}  // namespace stmod
