#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "stmod/equivariant.hpp"

namespace stmod {

// An ordered tuple of row covectors on R^ambient, entries element ids.
struct FunctionalTuple {
    const CoeffRing* R = nullptr;
    int ambient = 0;
    std::vector<std::vector<uint8_t>> rows;

    int size() const { return int(rows.size()); }
    RMat matrix() const;          // size() x ambient, row i = f_i
    bool all_surjective() const;  // every row has a unit entry
    std::string label() const;
};

FunctionalTuple make_tuple(const CoeffRing& R, int ambient,
                           const std::vector<std::vector<int>>& rows);
FunctionalTuple tuple_of_matrix(const RMat& m);
FunctionalTuple identity_tuple(const CoeffRing& R, int n);

// The evaluation map R^ambient -> R^sigma has projective cokernel,
// equivalently the rows span a direct summand of the dual module. Empty
// tuples pass, and over a field every tuple passes.
bool intersects_cleanly(const FunctionalTuple& sigma);

// E on the surjections R^n -> R: a subset is a simplex when each of its
// subsets intersects cleanly; E0 < E keeps the simplices whose evaluation
// R^n -> R^sigma is not injective. Vertex i of both complexes is
// vertices[i]. Throws cap_exceeded_error above vertex_cap vertices.
struct EComplexes {
    SimplicialComplex E, E0;
    std::vector<FunctionalTuple> vertices;
    bool full_simplex = false;  // every nonempty vertex subset is a simplex
};
EComplexes e_complexes(const CoeffRing& R, int n, int vertex_cap = 16);

// Chains of E relative to E0: basis the simplices outside E0, boundary
// faces dropped when they land in E0.
ChainComplex relative_complex_chains(const SimplicialComplex& E, const SimplicialComplex& E0);

// Homology in degree m of the tensor product of two free complexes with the
// given homology tables: H_p (x) H_q over p + q = m plus Tor(H_p, H_q) over
// p + q = m - 1. Absent table entries are zero.
AbGroup kunneth_homology(const std::map<int, AbGroup>& ha, const std::map<int, AbGroup>& hb,
                         int m);

// Degreewise comparison of the homology of the suspended relative
// E-complex (once for which = 1, twice for the pair bicomplex at which = 2)
// with the reduced homology of the k-fold grid model of F_q^n, k = which.
struct ResolutionReport {
    int q = 0, n = 0, which = 1;
    std::map<int, AbGroup> resolution_side;
    std::map<int, AbGroup> building_side;
    bool equal = false;

    json to_json() const;
};
ResolutionReport st_resolution_check(int q, int n, int which);

// Every subset of the union of the two tuples intersects cleanly. When the
// verdict is positive and fprime is invertible, the entries of
// f (fprime)^{-1} are checked to lie in {0} or the units.
bool symbol_defined(const FunctionalTuple& fprime, const FunctionalTuple& f);

// The two row-addition companions of psi at rows s < t: the first has row s
// replaced by row s + row t, the second has row t replaced by the same sum.
// Throws invalid_argument unless psi and both companions give defined
// symbols against the identity tuple.
std::array<RMat, 2> row_addition_terms(const RMat& psi, int s, int t);

// Flat basis of one total degree of the k-fold lattice-grid model, in
// multitotal_chains order: multidegrees lex ascending, nondegenerate grids
// in level order within each multidegree.
struct GridBasis {
    const CoeffRing* R = nullptr;
    int n = 0, k = 2, total = 0;
    PointedSSetLevels sset;
    std::vector<std::vector<int>> multidegrees;
    std::vector<std::vector<LatticeGrid>> levels;  // all grids per multidegree
    std::vector<std::vector<long>> flat;           // level index -> basis index, -1 degenerate
    std::vector<std::pair<int, long>> elements;    // basis index -> (multidegree slot, level index)

    long dim() const { return long(elements.size()); }
    const LatticeGrid& grid_at(long i) const;
    const std::vector<int>& multidegree_at(long i) const;
    // -1 for degenerate grids; throws internal_invariant_error when the grid
    // is missing from its level.
    long index_of(const std::vector<int>& p, const LatticeGrid& g) const;
    // Asserts that the degree-`total` labels of cc list this basis exactly.
    void verify_against(const ChainComplex& cc) const;
};
GridBasis grid_basis(const CoeffRing& R, int n, int k, int total, long cap = 1000000);

// [fprime] (x) [f] as a cycle in total degree 2n of the 2-fold lattice
// model: the signed sum over permutation pairs of the intersection grids of
// the two column flags of the inverse matrices. Zero when either matrix is
// singular; throws invalid_argument when the symbol is undefined.
Chain symbol_cycle(const FunctionalTuple& fprime, const FunctionalTuple& f,
                   const GridBasis& basis);

// Coinvariants of reduced H_{2d} of the 2-fold lattice model of R^d under
// GL_d(R), for a finite local ring R, together with the evaluation against
// the residue-field coinvariants induced by reducing grids cellwise.
struct LocalSt2Report {
    std::string ring;
    int d = 0;
    bool exploratory = true;  // finite residue field: reported, not asserted
    AbGroup group;            // coinvariants over R
    AbGroup residue_group;    // coinvariants over the residue field, Z
    std::vector<Int> reduction_values;  // residue evaluation of each kernel generator
    bool surjective = false;            // the composite map onto Z
    bool iso = false;                   // surjective with group Z

    json to_json() const;
};
LocalSt2Report st2_coinvariants_local(const CoeffRing& R, int d, bool allow_rank3 = false);

}  // namespace stmod
