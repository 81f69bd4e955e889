#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stmod/util.hpp"

namespace stmod {

// Raised when a chain complex or bicomplex fails its structural identities
// (d∘d != 0, anticommutation failure, dimension mismatch).
struct malformed_complex_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sparse integer matrix, row-major with sorted columns. A (rows x cols)
// matrix represents a map Z^cols -> Z^rows; no explicit zeros are stored.
struct SparseZMat {
    int rows = 0, cols = 0;
    std::vector<std::vector<std::pair<int, Int>>> data;

    SparseZMat() = default;
    SparseZMat(int r, int c) : rows(r), cols(c), data(size_t(r)) {}

    void add(int i, int j, const Int& v);  // accumulates, drops zeros
    Int at(int i, int j) const;
    long nnz() const;
    bool is_zero() const;
    SparseZMat transpose() const;
    SparseZMat mul(const SparseZMat& o) const;
    std::vector<Int> apply(const std::vector<Int>& x) const;
    static SparseZMat from_dense(const std::vector<std::vector<long>>& d);
    bool operator==(const SparseZMat& o) const = default;

    json to_json() const;
    static SparseZMat from_json(const json& j);
};

// Smith normal form U m V = diag(factors, 0...) with unimodular U, V stored
// as elementary-operation logs; factors form a divisibility chain.
struct SnfResult {
    int src_rows = 0, src_cols = 0;
    std::vector<Int> factors;  // nonzero diagonal entries, d1 | d2 | ...
    bool has_transforms = false;

    struct Op {
        int kind;  // 0 swap(a,b), 1 negate(a), 2 add: line a += t * line b
        int a, b;
        Int t;
    };
    std::vector<Op> row_ops, col_ops;

    int rank() const { return int(factors.size()); }

    // U y for a column vector y of length src_rows.
    std::vector<Int> apply_row_ops(std::vector<Int> y) const;
    // V e_i: column i of V, used for kernel bases (i >= rank).
    std::vector<Int> col_of_v(int i) const;
    // V w for a coefficient vector w of length src_cols.
    std::vector<Int> apply_col_ops(std::vector<Int> w) const;

    SparseZMat U() const;
    SparseZMat V() const;
};

SnfResult smith(const SparseZMat& m, bool want_transforms = true);

// Integer column-space membership: solutions of m x = b over Z.
class LinearSolver {
   public:
    explicit LinearSolver(SparseZMat m);
    std::optional<std::vector<Int>> solve(const std::vector<Int>& b) const;
    int rank() const { return snf_.rank(); }

   private:
    SnfResult snf_;
};

// Columns spanning ker(m) over Z; the basis extends to a basis of Z^cols
// (the kernel of a map of free groups is a direct summand).
std::vector<std::vector<Int>> kernel_basis(const SparseZMat& m);

// Columns spanning ker(m mod p) over F_p (p prime), entries lifted to 0..p-1.
std::vector<std::vector<Int>> kernel_basis_mod(const SparseZMat& m, long p);

// Rank of m over F_p (p prime, fits in a machine word).
long rank_mod(const SparseZMat& m, long p);

// Finitely generated abelian group: Z^free_rank + Z/t1 + Z/t2 + ... with
// 1 < t1 | t2 | ...
struct AbGroup {
    long free_rank = 0;
    std::vector<Int> torsion;

    bool operator==(const AbGroup& o) const = default;
    bool is_zero() const { return free_rank == 0 && torsion.empty(); }
    bool is_free_of_rank(long r) const { return free_rank == r && torsion.empty(); }
    std::string to_string() const;
    json to_json() const;
};

AbGroup cokernel(const SparseZMat& m);  // Z^rows / column span

// Z^gens modulo the row span of rels (rels.cols == gens). gen_images[j] is
// the class of generator j in the canonical decomposition, coordinates
// ordered torsion factors first (mod t_i) then free coordinates.
struct PresentedCokernel {
    AbGroup group;
    std::vector<std::vector<Int>> gen_images;
};

PresentedCokernel presentation_cokernel(int gens, const SparseZMat& rels,
                                        bool want_gen_images = false);

// Chain complex of free Z-modules; diff[d] maps degree d to d-1. Degrees not
// present carry the zero module. Reduced homology is obtained by including
// the augmentation as a basis element in degree -1.
struct ChainComplex {
    std::map<int, std::vector<std::string>> labels;
    std::map<int, SparseZMat> diff;

    long dim(int d) const;
    int min_degree() const;
    int max_degree() const;
    const SparseZMat* differential(int d) const;  // nullptr when zero
    void set_labels(int d, std::vector<std::string> l);
    void set_diff(int d, SparseZMat m);  // validates dimensions
    void verify() const;                 // every composite d∘d must vanish
    long euler_characteristic() const;

    json to_json() const;
    static ChainComplex from_json(const json& j);
};

struct Coeffs {
    enum class Kind { integral, rational, mod_p };
    Kind kind = Kind::integral;
    long p = 0;

    static Coeffs Z() { return {Kind::integral, 0}; }
    static Coeffs Q() { return {Kind::rational, 0}; }
    static Coeffs Fp(long p) { return {Kind::mod_p, p}; }
};

// Homology at one degree. For field coefficients the result is free of rank
// equal to the dimension. Throws malformed_complex_error when the two
// differentials touching degree d do not compose to zero.
AbGroup homology(const ChainComplex& cc, int d, Coeffs c = Coeffs::Z());

// Double complex with commuting differentials dh: (p,q)->(p-1,q) and
// dv: (p,q)->(p,q-1); the total complex uses d = dh + (-1)^p dv.
struct Bicomplex {
    std::map<std::pair<int, int>, std::vector<std::string>> labels;
    std::map<std::pair<int, int>, SparseZMat> dh, dv;

    long dim(int p, int q) const;
    void verify() const;  // squares vanish, squares commute
};

ChainComplex total_complex(const Bicomplex& bc);

// Tensor-product bicomplex of two complexes; basis at (p,q) is a_i (x) b_j in
// row-major order (i * dimB + j), dh = dA (x) id, dv = id (x) dB.
Bicomplex tensor_bicomplex(const ChainComplex& a, const ChainComplex& b);

}  // namespace stmod
