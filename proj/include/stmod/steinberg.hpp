#pragma once

#include <map>
#include <memory>

#include "stmod/buildings.hpp"
#include "stmod/zhomology.hpp"

namespace stmod {

// The Steinberg module of F_q^n: the kernel of the top differential of the
// augmented chains on the order complex of proper nonzero subspaces. Its
// coordinates are the complete flags (the top simplices), which form an
// orthonormal basis for the pairing. For n = 1 the complex is empty and the
// module is Z on the empty flag.
struct SteinbergModule {
    int q = 0, n = 0;
    const CoeffRing* R = nullptr;
    SimplicialComplex order_complex;
    ChainComplex chains;                  // augmented
    std::vector<std::vector<int>> flags;  // top simplices as sorted vertex lists
    std::vector<int> vertex_subspace;     // complex vertex id -> pool id
    std::vector<int> vertex_of_pool;      // pool id -> vertex id, -1 off the complex
    std::vector<std::vector<Int>> kernel; // columns: saturated basis of the module
    std::map<std::vector<int>, long> flag_lookup;

    int top_degree() const { return n - 2; }
    long flag_count() const { return long(flags.size()); }
    long rank() const { return long(kernel.size()); }
    // Sign relating a flag's inclusion order to its vertex-index order.
    int flag_sign(long flag_index) const;
    long flag_index(const std::vector<int>& sorted_vertices) const;  // -1 when absent
};

const SteinbergModule& steinberg_module(int q, int n);

// An element in flag coordinates. Arithmetic stays meaningful only for
// kernel elements; every constructor below produces cycles.
struct SteinbergClass {
    int q = 0, n = 0;
    std::vector<Int> coords;

    bool is_zero() const;
    SteinbergClass operator+(const SteinbergClass& o) const;
    SteinbergClass operator-(const SteinbergClass& o) const;
    SteinbergClass operator*(const Int& c) const;
    bool operator==(const SteinbergClass& o) const = default;
};

SteinbergClass st_zero(int q, int n);
bool st_is_cycle(const SteinbergClass& x);
// Dot product over the flag basis.
Int st_pairing(const SteinbergClass& x, const SteinbergClass& y);
// Apartment class of a spanning tuple of lines: the alternating sum over
// orderings of the complete flag of partial sums.
SteinbergClass st_apartment(const std::vector<Subspace>& lines);
SteinbergClass st_standard_apartment(int q, int n);
SteinbergClass st_act(const RMat& g, const SteinbergClass& x);

// Conversions to and from level {n} of the one-direction grid model
// dk_sset(F_q, n, 1). Degenerate grids are dropped on the way in.
Chain st_to_flag_chain(const SteinbergClass& x);
SteinbergClass st_from_flag_chain(int q, int n, const Chain& c);

// Chain-level product: shuffle the grid chains and block-sum the grids.
// Sends apartment (x) apartment to the apartment of the concatenation.
SteinbergClass st_product(const SteinbergClass& a, const SteinbergClass& b);

// Adjacent transvections (both triangles, all nonzero scalars), adjacent
// transposition permutation matrices, and a primitive scalar in the first
// diagonal slot. Generates GL_n(F_q).
std::vector<RMat> gl_generators(const CoeffRing& R, int n);

// Presentation with one generator per ordered basis (columns of an invertible
// matrix) and one relation per spanning (n+1)-tuple of nonzero vectors, the
// alternating sum of its coordinate deletions, non-bases dropped.
struct LSPresentation {
    int q = 0, n = 0;
    long basis_count = 0;
    long tuple_count = 0;
    AbGroup cokernel;
    bool relations_vanish = false;  // every relation maps to zero in the module
    bool surjective = false;        // basis images span the module over Z
    bool isomorphic = false;
};
LSPresentation lee_szczarba(int q, int n, long cap = 600000);

enum class CoinvariantsKind { st, st2 };

// GL_n(F_q)-coinvariants of the module (st) or its tensor square with the
// diagonal action (st2). For st2 the presentation classes are the diagonal
// orbits of pairs of unipotent translates of the standard apartment, and the
// pairing descends to a distinguished map to Z.
struct CoinvariantsResult {
    CoinvariantsKind kind = CoinvariantsKind::st;
    int q = 0, n = 0;
    AbGroup group;
    bool pairing_map_defined = false;
    bool pairing_iso = false;
    Int pairing_scale = 0;            // pairing = scale * free coordinate
    std::vector<Int> class_images;    // free coordinate of each class (st2, group Z)
    std::vector<int> pair_class;      // translate pair (i, j) -> class id
    long translate_count = 0;
    std::shared_ptr<const LinearSolver> translate_solver;  // flag coords -> translate coords

    // Free coordinate of the class of x (x) y; requires group Z.
    Int image(const SteinbergClass& x, const SteinbergClass& y) const;
};

CoinvariantsResult coinvariants(CoinvariantsKind kind, int q, int n,
                                const std::vector<RMat>* extra_generators = nullptr,
                                bool collapse_translates = true);

// Coefficient c with [1](x)[psi] = c [1](x)[J_n] in the coinvariants of the
// tensor square, computed by the row/column rewriting walk: clear the last
// row, then the last column, recurse on the leading block, then merge Jordan
// blocks right to left. Memoized per matrix.
Int jordan_reduce(const RMat& psi);

// Image of gamma_m gamma_n in gamma_(m+n) coordinates: the product of the
// normalized apartment tensor squares under the block-sum product, divided by
// m! n! with exact sign bookkeeping. Expected binomial(m+n, n).
Int gamma_structure(int m, int n, int q);

// Invariant bilinear forms and equivariant endomorphisms of the module over
// the given coefficients; definiteness of the pairing over Z or Q.
struct FormReport {
    int q = 0, n = 0;
    long invariant_form_dim = 0;
    bool symmetric = false;           // all invariant forms symmetric
    bool positive_definite = false;   // the pairing, integral coefficients only
    long adjoint_kernel_dim = 0;      // kernel of the pairing Gram matrix
    long equivariant_endo_dim = 0;
};
FormReport form_report(int q, int n, Coeffs c);

}  // namespace stmod
