#pragma once

#include <functional>
#include <map>
#include <vector>

#include "stmod/buildings.hpp"
#include "stmod/steinberg.hpp"

namespace stmod {

// Finite matrix group over a table ring. When enumerated, `elements` is the
// breadth-first closure of the generators with elements[0] the identity, and
// its size is checked against `order`.
struct GroupData {
    int q = 0, n = 0;
    const CoeffRing* R = nullptr;
    std::vector<RMat> generators;
    std::vector<RMat> elements;
    Int order = 1;

    bool enumerated() const { return !elements.empty(); }
};

// GL_n(F_q) with the standard generators; order = prod_i (q^n - q^i).
// Enumeration refuses groups larger than cap.
GroupData gl_group(int q, int n, bool enumerate = true, long cap = 100000);
// Monomial matrices (permutation times invertible diagonal); order n!(q-1)^n.
GroupData monomial_group(int q, int n, bool enumerate = true, long cap = 100000);
// Identity-only group acting on F_q^n, for baseline comparisons.
GroupData trivial_group(int q, int n);
// GL_n(R) over any table ring: unit transvections, adjacent swaps, and unit
// dilations; order p^((e-1)n^2) * prod_i (p^n - p^i) over the residue
// characteristic p. Fields use the gl_group generator set.
GroupData local_gl_group(const CoeffRing& R, int n, bool enumerate = false, long cap = 200000);

// A chain complex with a group acting by signed permutations of each degree's
// basis: act(g, d, i) -> (image index, sign). Builders check that the action
// of every generator commutes with the differentials.
struct EquivariantComplex {
    ChainComplex cc;
    GroupData group;
    std::function<std::pair<long, int>(const RMat&, int, long)> act;
};

// Throws internal_invariant_error unless every generator's action is a chain
// map on all stored degrees.
void verify_equivariance(const EquivariantComplex& x);

// Normalized chains of the k-fold lattice-grid model of F_q^n through total
// degree max_total_deg, with g acting cellwise on grids. The group must
// consist of invertible n x n matrices over the same field.
EquivariantComplex dk_equivariant_complex(const GroupData& g, int k, int max_total_deg,
                                          long cap = 1000000);
// Same for the splitting-grid model.
EquivariantComplex split_dk_equivariant_complex(const GroupData& g, int k, int max_total_deg,
                                                long cap = 1000000);

enum class OrbitBackend { transfer, borel };

// Homology of the pointed homotopy orbits X // G.
//   transfer: coinvariants of the homology of X; needs |G| invertible in the
//     coefficients (rational, or mod p with p not dividing |G|). Returns
//     degrees 0..max_deg; max_deg must stay below the stored top degree of
//     the complex unless the complex vanishes above it.
//   borel: homology of the total complex of chains against the normalized bar
//     resolution truncated at word length max_deg; any coefficients, needs the
//     enumerated group, exact in degrees 0..max_deg-1 (the returned range).
std::map<int, AbGroup> homotopy_orbit_homology(const EquivariantComplex& x, Coeffs coeffs,
                                               int max_deg, OrbitBackend backend);

// E_k-homology table: entry d is reduced H_{d+k} of the splitting model of
// F_q^n modulo GL_n(F_q), for d = 0..max_d. Dispatches to the transfer
// backend when |GL_n(F_q)| is invertible in the coefficients and to the bar
// backend otherwise.
std::map<int, AbGroup> ek_homology(int q, int n, int k, Coeffs coeffs, int max_d,
                                   long cap = 1000000);

// Rational homotopy-orbit homology of the splitting and lattice models of
// F_q^n modulo GL_n(F_q) through degree max_deg, with an equality verdict.
struct SplitFlagReport {
    int q = 0, n = 0, k = 1;
    std::map<int, AbGroup> split_table, flag_table;
    bool equal = false;
};
SplitFlagReport split_vs_flag_compare(int q, int n, int k, int max_deg);

}  // namespace stmod
