#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace modrec {

using cplx = std::complex<double>;

/// Gray-mapped symbol constellation with unit average energy.
struct Constellation {
    std::vector<cplx> points;       // indexed by point id
    int bits_per_symbol = 0;        // B
    std::vector<int> gray_map;      // bit pattern (MSB-first integer) -> point index

    int size() const { return static_cast<int>(points.size()); }

    // bits[0..B-1] in {0,1} -> constellation point
    cplx map_bits(const std::vector<int>& bits) const;
    int index_of_bits(const std::vector<int>& bits) const;
    std::vector<int> bits_of_index(int idx) const;

    /// Nearest point in Euclidean distance, ties broken by lowest index.
    int nearest(cplx r) const;

    static Constellation bpsk();
    static Constellation qpsk();
};

/// Per-time-step bit payload for K users, B bits each.
struct BitBlock {
    Eigen::MatrixXi bits;  // K x B, entries in {0,1}
    int users() const { return static_cast<int>(bits.rows()); }
    int bits_per_symbol() const { return static_cast<int>(bits.cols()); }
};

/// Gray-map each user's bit row to a symbol.
Eigen::VectorXcd modulate(const BitBlock& block, const Constellation& c);

}  // namespace modrec
