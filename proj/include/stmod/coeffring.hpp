#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stmod/util.hpp"

namespace stmod {

// A finite coefficient ring: prime field F_p, Z/p^e, or F_p[x]/(x^2).
// All are connected local; every element is a unit or lies in the maximal
// ideal (pi), and every ideal is (pi^k) for 0 <= k <= nilpotency.
struct CoeffRing {
    enum class Kind { prime_field, local_z, dual_numbers };

    Kind kind;
    int p;           // residue characteristic
    int e;           // Z/p^e exponent; 1 for fields, 2 for dual numbers
    int size;        // |R|
    int nilpotency;  // smallest k with pi^k = 0 (1 for fields)
    int pi;          // uniformizer element id (0 for fields: the zero ideal)
    std::string name;

    std::vector<uint8_t> add_t, mul_t, neg_t;
    std::vector<int> inv_t;        // -1 for non-units
    std::vector<uint8_t> units;    // unit element ids, ascending
    std::vector<uint8_t> residue;  // reduction to F_p, values in 0..p-1
    std::vector<uint8_t> vals;     // pi-adic valuation, vals[0] = nilpotency

    int zero() const { return 0; }
    int one() const { return 1; }
    int add(int a, int b) const { return add_t[a * size + b]; }
    int mul(int a, int b) const { return mul_t[a * size + b]; }
    int neg(int a) const { return neg_t[a]; }
    int sub(int a, int b) const { return add(a, neg(b)); }
    bool is_unit(int a) const { return inv_t[a] >= 0; }
    int inv(int a) const;
    int val(int a) const { return vals[a]; }
    bool is_field() const { return e == 1 && kind != Kind::dual_numbers; }
    int lift_int(long k) const;  // image of the integer k in R
    int pi_pow(int k) const;

    std::string elem_name(int a) const;
    int parse_elem(const std::string& s) const;
};

// Accepts "F5", "Fq:5", "Z/4", "F3[x]/(x2)". Canonical names are the
// "F5" / "Z/4" / "F3[x]/(x2)" spellings.
const CoeffRing& ring_from_descriptor(const std::string& desc);

struct RMat {
    const CoeffRing* R = nullptr;
    int rows = 0, cols = 0;
    std::vector<uint8_t> a;

    RMat() = default;
    RMat(const CoeffRing& ring, int r, int c) : R(&ring), rows(r), cols(c), a(size_t(r) * c, 0) {}
    uint8_t& at(int i, int j) { return a[size_t(i) * cols + j]; }
    uint8_t at(int i, int j) const { return a[size_t(i) * cols + j]; }
    static RMat identity(const CoeffRing& ring, int n);
    RMat mul(const RMat& o) const;
    RMat transpose() const;
    bool operator==(const RMat& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
    std::string to_string() const;
};

RMat parse_rmat(const CoeffRing& R, const std::string& text, int n);  // "a,b;c,d"

struct RrefResult {
    int rank;
    std::vector<int> pivots;
    RMat reduced;
};

// Fields only: row-reduced echelon form preserving the row space.
RrefResult rref(const RMat& m);
int rank_field(const RMat& m);

// An ideal of a supported local ring, normalized to a power of the
// uniformizer: (pi^k). k = 0 is the unit ideal, k = nilpotency the zero ideal.
struct IdealDesc {
    int pi_power;
    int nilpotency;
    bool is_unit_ideal() const { return pi_power == 0; }
    bool is_zero_ideal() const { return pi_power >= nilpotency; }
    bool operator==(const IdealDesc& o) const = default;
    std::string to_string() const;
};

// Ideal generated by the (t-s)x(t-s) minors of m, t = rows. Fit_s = (1) for
// s >= t. Minors by Laplace expansion with memoization, capped at 12x12.
IdealDesc fitting_ideal(const RMat& m, int s);

// Smallest d with Fit_d = (1) and Fit_{d-1} = (0), i.e. coker(m) projective of
// rank d; nullopt when the cokernel is not projective.
std::optional<int> cokernel_projective_rank(const RMat& m);

// Diagonal form over the local ring: returns the sorted valuations k_i of the
// diagonal pi^{k_i} (entries with k_i = nilpotency are zero). With transforms,
// fills U (rows x rows) and V (cols x cols) invertible with U*m*V diagonal.
std::vector<int> local_smith(const RMat& m, RMat* U = nullptr, RMat* V = nullptr);

// Solve x * a = b for a row vector x (b has a.cols entries, x gets a.rows).
// Returns a solution when b lies in the row span of a, nullopt otherwise.
std::optional<std::vector<uint8_t>> solve_left(const RMat& a, const std::vector<uint8_t>& b);

struct SummandResult {
    bool is_summand;
    std::vector<std::vector<int>> complement;  // generators, when a summand
};

// Do the given column vectors generate a direct summand of R^n?
SummandResult is_direct_summand(const CoeffRing& R, const std::vector<std::vector<int>>& gens,
                                int n);

}  // namespace stmod
