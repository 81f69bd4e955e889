#pragma once

#include <optional>

#include "stmod/coeffring.hpp"
#include "stmod/simplicial.hpp"

namespace stmod {

// Vectors in R^n are encoded as sum of element-id * |R|^i, coordinate 0 least
// significant.
long encode_vector(const CoeffRing& R, const std::vector<uint8_t>& v);
std::vector<uint8_t> decode_vector(const CoeffRing& R, int n, long code);

// A submodule of R^n. `gens` is a canonical generating matrix (rows generate):
// reduced echelon form over fields, a greedy sieve of the sorted element list
// otherwise. `elems` is the full sorted encoded span, the equality key.
struct Subspace {
    const CoeffRing* R = nullptr;
    int ambient = 0;
    RMat gens;
    std::vector<long> elems;

    long size() const { return long(elems.size()); }
    bool is_zero() const { return elems.size() == 1; }
    bool is_full() const;
    int min_gens() const { return gens.rows; }
    bool contains_code(long code) const;
    bool contains(const Subspace& other) const;
    std::string label() const;
    bool operator==(const Subspace& o) const { return ambient == o.ambient && elems == o.elems; }
    bool operator<(const Subspace& o) const;
};

Subspace span_of(const CoeffRing& R, int ambient, const std::vector<std::vector<uint8_t>>& gens);
Subspace zero_subspace(const CoeffRing& R, int ambient);
Subspace full_subspace(const CoeffRing& R, int ambient);
Subspace subspace_sum(const Subspace& a, const Subspace& b);
Subspace subspace_intersect(const Subspace& a, const Subspace& b);
// g acts on row vectors by v -> v g^T, a left action on submodules.
Subspace transform(const RMat& g, const Subspace& s);
bool subspace_is_summand(const Subspace& s);
// Rows form a free basis; throws unsupported_operation_error if not free.
RMat free_basis(const Subspace& s);

// All submodules of R^n, sorted; `summands` lists the indices of the direct
// summands (the elements of Sub(R^n)). Cached per (ring, n).
struct SubspacePool {
    const CoeffRing* R = nullptr;
    int n = 0;
    std::vector<Subspace> subs;
    std::vector<int> summands;
    int find(const Subspace& s) const;  // -1 when absent (never, for submodules of R^n)
    int zero_id() const;
    int full_id() const;
};
const SubspacePool& submodule_pool(const CoeffRing& R, int n);

// Monotone grid phi: [p_1] x ... x [p_k] -> submodules, cells indexed into the
// pool, row-major with coordinate a_t in 0..p_t.
struct LatticeGrid {
    const SubspacePool* pool = nullptr;
    std::vector<int> shape;
    std::vector<int> cells;

    int k() const { return int(shape.size()); }
    long cell_slot(const std::vector<int>& a) const;
    const Subspace& at(const std::vector<int>& a) const;
    std::string label() const;
    bool operator==(const LatticeGrid& o) const = default;
    bool operator<(const LatticeGrid& o) const;
};

// Splitting grid: parts indexed over i_t in 1..p_t (row-major), direct sum of
// all parts is R^n.
struct SplitGrid {
    const SubspacePool* pool = nullptr;
    std::vector<int> shape;
    std::vector<int> parts;

    int k() const { return int(shape.size()); }
    long part_slot(const std::vector<int>& i) const;
    const Subspace& at(const std::vector<int>& i) const;
    std::string label() const;
    bool operator==(const SplitGrid& o) const = default;
    bool operator<(const SplitGrid& o) const;
};

LatticeGrid make_lattice_grid(const CoeffRing& R, int n, std::vector<int> shape,
                              const std::vector<Subspace>& cells);
SplitGrid make_split_grid(const CoeffRing& R, int n, std::vector<int> shape,
                          const std::vector<Subspace>& parts);

bool grid_monotone(const LatticeGrid& g);
bool is_full(const LatticeGrid& g);
// Lattice condition: over every adjacent cube the punctured-cube colimit,
// computed as a cokernel of the edge-vertex incidence map, injects onto a
// summand. Cells must be summands and the grid monotone.
bool is_lattice(const LatticeGrid& g);
bool is_splitting(const SplitGrid& g);

// Flag complex of proper nonzero subspaces of F_q^n ordered by inclusion.
SimplicialComplex tits(int q, int n);

// Level enumerations, sorted canonically. Deterministic across thread counts.
std::vector<SplitGrid> split_dk_level(const CoeffRing& R, int n, int k,
                                      const std::vector<int>& shape, long cap = 1000000);
std::vector<LatticeGrid> dk_level(const CoeffRing& R, int n, int k, const std::vector<int>& shape,
                                  long cap = 1000000);
long level_index(const std::vector<LatticeGrid>& level, const LatticeGrid& g);
long level_index(const std::vector<SplitGrid>& level, const SplitGrid& g);

// k-fold pointed simplicial objects backed by memoized level enumeration.
PointedSSetLevels dk_sset(const CoeffRing& R, int n, int k, long cap = 1000000);
PointedSSetLevels split_dk_sset(const CoeffRing& R, int n, int k, long cap = 1000000);

// Structure maps. Faces of lattices precompose with a coface; a non-full
// result is the basepoint. Faces of splittings merge or drop border slots; a
// dropped nonzero slot is the basepoint (nullopt).
LatticeGrid lattice_face(const LatticeGrid& g, int dir, int i);
LatticeGrid lattice_degeneracy(const LatticeGrid& g, int dir, int i);
std::optional<SplitGrid> split_face(const SplitGrid& g, int dir, int i);
SplitGrid split_degeneracy(const SplitGrid& g, int dir, int i);

// phi(a) = sum of parts(i) over i <= a.
LatticeGrid forget_splitting(const SplitGrid& s);
// j-th flag fixes all coordinates but the j-th at their maxima.
std::vector<LatticeGrid> smash_embed(const LatticeGrid& g);
// Candidate grid phi(a) = intersection of the flags at their a_j; not always a
// lattice.
LatticeGrid from_flags_by_intersection(const std::vector<LatticeGrid>& flags);
// Alternating sum over orderings of the partial-sum flags of a spanning tuple
// of rank-1 summands; a cycle in level {n} of dk_sset(R, n, 1). Pass the
// enumerated level to avoid recomputing it per call.
Chain apartment_chain(const std::vector<Subspace>& lines,
                      const std::vector<LatticeGrid>* level = nullptr);
LatticeGrid block_sum(const LatticeGrid& a, const LatticeGrid& b);
SplitGrid block_sum(const SplitGrid& a, const SplitGrid& b);
// Shape [1, p_1, ..., p_k]: zero on the new coordinate's 0 slice, g on its 1
// slice.
LatticeGrid suspension_map(const LatticeGrid& g);

// Last-direction filtration census: for each level over the first k
// directions, counts non-basepoint splittings of shape (level, p) whose last
// direction has no zero layer, against the census over ordered decompositions
// R^n = Q_1 + ... + Q_p (all nonzero) weighted by splitting counts of each Q_j.
struct FiltrationCensus {
    std::map<std::vector<int>, std::pair<long, long>> level_counts;
    bool matches = true;
};
FiltrationCensus filtration_quotient_counts(const CoeffRing& R, int n, int k_plus_1, int p,
                                            int max_level, long cap = 1000000);

}  // namespace stmod
