#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stmod/zhomology.hpp"

namespace stmod {

// A pointed k-fold simplicial set presented by level callbacks. level(p)
// lists the non-basepoint elements at multidegree p (p.size() == arity) in a
// canonical order; face/degeneracy return the index of the image element in
// the adjacent level, with -1 standing for the basepoint. Structure maps must
// satisfy the simplicial identities in each direction and commute across
// directions; providers generate levels lazily and may throw cap_exceeded_error
// beyond their configured range.
struct PointedSSetLevels {
    int arity = 1;
    std::function<std::vector<std::string>(const std::vector<int>&)> level;
    std::function<long(const std::vector<int>&, long, int, int)> face;        // (p, e, dir, i)
    std::function<long(const std::vector<int>&, long, int, int)> degeneracy;  // (p, e, dir, i)
};

// x at level p is degenerate iff x = s_i(d_i x) for some direction and index.
bool is_degenerate(const PointedSSetLevels& x, const std::vector<int>& p, long e);

// Checks the simplicial identities on all levels with p <= max_p pointwise;
// throws internal_invariant_error on the first violation.
void verify_levels(const PointedSSetLevels& x, const std::vector<int>& max_p);

// Normalized chains of a one-direction pointed simplicial set: basis in
// degree d = non-degenerate non-basepoint d-simplices, boundary = alternating
// face sum with basepoint and degenerate images dropped. Degrees 0..max_deg.
ChainComplex normalized_chains(const PointedSSetLevels& x, int max_deg);

// Total complex of the k-fold normalized chains: basis at total degree n =
// non-degenerate elements over all multidegrees with |p| = n, differential in
// direction t signed by (-1)^{p_1+...+p_{t-1}}. For arity 1 this agrees with
// normalized_chains.
ChainComplex multitotal_chains(const PointedSSetLevels& x, int max_total_deg);

// A chain at a single (multi)level: element index -> coefficient.
using Chain = std::map<long, Int>;

// Eilenberg-Zilber shuffle product of a (degree m in x) and b (degree n in y).
// combine maps a pair of degeneracy-padded (m+n)-simplices to an element index
// in the target level of a third simplicial set, or -1 to drop the term
// (basepoint or degenerate image). Returns the signed chain of the target.
Chain shuffle_product(const PointedSSetLevels& x, int m, const Chain& a,
                      const PointedSSetLevels& y, int n, const Chain& b,
                      const std::function<long(long, long)>& combine);

// Finite abstract simplicial complex on vertices 0..vertex_count-1; simplices
// stored as sorted vertex lists, closed under passing to subsets.
struct SimplicialComplex {
    int vertex_count = 0;
    std::vector<std::string> vertex_labels;  // defaults to v<i> when empty
    std::set<std::vector<int>> simplices;

    void add_simplex(std::vector<int> s);  // inserts s and all faces
    bool has(const std::vector<int>& s) const { return simplices.count(s) > 0; }
    int dimension() const;
};

// Oriented simplicial chains with the global vertex order; with augmented the
// empty simplex is added in degree -1, so homology comes out reduced.
ChainComplex complex_chains(const SimplicialComplex& k, bool augmented);

// The pointed simplicial set of an ordered simplicial complex: d-simplices
// are weakly increasing vertex tuples spanning a simplex. With pointed_vertex
// >= 0 that vertex and its degeneracies are collapsed to the basepoint
// (reduced homology of K); with -1 a disjoint basepoint is added (unreduced).
PointedSSetLevels sset_of_complex(const SimplicialComplex& k, int pointed_vertex = -1);

}  // namespace stmod
