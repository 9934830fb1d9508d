#pragma once

#include <vector>

#include <Eigen/Dense>

namespace floquet {

// Lexicographically ordered k-subsets of {0..N-1}.
class SubsetIndex {
public:
    SubsetIndex() = default;
    SubsetIndex(int N, int k);

    int N() const { return N_; }
    int k() const { return k_; }
    int size() const { return static_cast<int>(masks_.size()); }
    unsigned mask(int i) const { return masks_[i]; }
    std::vector<int> subset(int i) const;
    // -1 when the mask is not a k-subset
    int index_of(unsigned mask) const;

private:
    int N_ = 0, k_ = 0;
    std::vector<unsigned> masks_;
    std::vector<int> lookup_;
};

struct SparseEntry {
    int row;
    int col;
    double coef;
};

// Entries of the additive compound of the unit matrix E_{rs} on k-subsets:
// d/dx (wedge^k Y) = A^[k] (wedge^k Y) when Y' = A Y.
std::vector<SparseEntry> additive_compound_unit(const SubsetIndex& idx, int r, int s);

// Matrix of k x k minors, rows and columns indexed by idx.
Eigen::MatrixXcd multiplicative_compound(const Eigen::MatrixXcd& M, const SubsetIndex& idx);

int popcount(unsigned m);

}  // namespace floquet
