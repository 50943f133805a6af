#include "modrec/constellation.hpp"

#include <cmath>
#include <stdexcept>

namespace modrec {

cplx Constellation::map_bits(const std::vector<int>& bits) const {
    return points[static_cast<std::size_t>(index_of_bits(bits))];
}

int Constellation::index_of_bits(const std::vector<int>& bits) const {
    if (static_cast<int>(bits.size()) != bits_per_symbol)
        throw std::invalid_argument("constellation: bit count mismatch");
    int pattern = 0;
    for (int b : bits) pattern = (pattern << 1) | (b != 0);
    return gray_map[static_cast<std::size_t>(pattern)];
}

std::vector<int> Constellation::bits_of_index(int idx) const {
    for (std::size_t pattern = 0; pattern < gray_map.size(); ++pattern) {
        if (gray_map[pattern] == idx) {
            std::vector<int> bits(static_cast<std::size_t>(bits_per_symbol));
            for (int i = 0; i < bits_per_symbol; ++i)
                bits[static_cast<std::size_t>(i)] =
                    (static_cast<int>(pattern) >> (bits_per_symbol - 1 - i)) & 1;
            return bits;
        }
    }
    throw std::invalid_argument("constellation: index not in gray map");
}

int Constellation::nearest(cplx r) const {
    int best = 0;
    double best_d = std::norm(r - points[0]);
    for (int i = 1; i < size(); ++i) {
        double d = std::norm(r - points[static_cast<std::size_t>(i)]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

Constellation Constellation::bpsk() {
    Constellation c;
    c.points = {cplx(1.0, 0.0), cplx(-1.0, 0.0)};
    c.bits_per_symbol = 1;
    c.gray_map = {0, 1};  // 0 -> +1, 1 -> -1
    return c;
}

Constellation Constellation::qpsk() {
    // Bit pair (b1, b2): b1 selects the real sign, b2 the imaginary sign,
    // with 0 -> + and 1 -> -.
    const double a = 1.0 / std::sqrt(2.0);
    Constellation c;
    c.points = {cplx(a, a), cplx(a, -a), cplx(-a, a), cplx(-a, -a)};
    c.bits_per_symbol = 2;
    c.gray_map = {0, 1, 2, 3};  // pattern b1b2 maps directly by sign choice
    return c;
}

Eigen::VectorXcd modulate(const BitBlock& block, const Constellation& c) {
    if (block.bits_per_symbol() != c.bits_per_symbol)
        throw std::invalid_argument("modulate: bits per symbol mismatch");
    const int K = block.users();
    Eigen::VectorXcd s(K);
    std::vector<int> bits(static_cast<std::size_t>(c.bits_per_symbol));
    for (int k = 0; k < K; ++k) {
        for (int i = 0; i < c.bits_per_symbol; ++i) bits[static_cast<std::size_t>(i)] = block.bits(k, i);
        s(k) = c.map_bits(bits);
    }
    return s;
}

}  // namespace modrec
