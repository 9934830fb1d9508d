#include "floquet/exterior.hpp"

#include <bit>
#include <stdexcept>

namespace floquet {

int popcount(unsigned m) { return std::popcount(m); }

SubsetIndex::SubsetIndex(int N, int k) : N_(N), k_(k) {
    if (N < 0 || N > 20 || k < 0 || k > N) throw std::invalid_argument("SubsetIndex: bad size");
    lookup_.assign(1u << N, -1);
    // lexicographic order of sorted tuples
    std::vector<int> c(k);
    for (int i = 0; i < k; ++i) c[i] = i;
    while (true) {
        unsigned m = 0;
        for (int v : c) m |= 1u << v;
        lookup_[m] = static_cast<int>(masks_.size());
        masks_.push_back(m);
        int i = k - 1;
        while (i >= 0 && c[i] == N - k + i) --i;
        if (i < 0) break;
        ++c[i];
        for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
    }
}

std::vector<int> SubsetIndex::subset(int i) const {
    std::vector<int> out;
    for (int b = 0; b < N_; ++b)
        if (masks_[i] >> b & 1u) out.push_back(b);
    return out;
}

int SubsetIndex::index_of(unsigned mask) const {
    if (mask >= lookup_.size()) return -1;
    return lookup_[mask];
}

std::vector<SparseEntry> additive_compound_unit(const SubsetIndex& idx, int r, int s) {
    std::vector<SparseEntry> out;
    for (int i = 0; i < idx.size(); ++i) {
        unsigned I = idx.mask(i);
        if (!(I >> r & 1u)) continue;
        if (r == s) {
            out.push_back({i, i, 1.0});
            continue;
        }
        if (I >> s & 1u) continue;
        unsigned J = (I & ~(1u << r)) | (1u << s);
        int lo = r < s ? r : s, hi = r < s ? s : r;
        unsigned between = I & ~(1u << r);
        between &= ((1u << hi) - 1u) & ~((1u << (lo + 1)) - 1u);
        double sign = (popcount(between) % 2) ? -1.0 : 1.0;
        out.push_back({i, idx.index_of(J), sign});
    }
    return out;
}

Eigen::MatrixXcd multiplicative_compound(const Eigen::MatrixXcd& M, const SubsetIndex& idx) {
    const int d = idx.size(), k = idx.k();
    Eigen::MatrixXcd C(d, d);
    if (k == 0) {
        C(0, 0) = 1.0;
        return C;
    }
    for (int i = 0; i < d; ++i) {
        auto R = idx.subset(i);
        for (int j = 0; j < d; ++j) {
            auto Cs = idx.subset(j);
            Eigen::MatrixXcd sub(k, k);
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) sub(a, b) = M(R[a], Cs[b]);
            C(i, j) = sub.determinant();
        }
    }
    return C;
}

}  // namespace floquet
