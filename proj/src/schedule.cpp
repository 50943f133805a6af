#include "modrec/schedule.hpp"

#include <stdexcept>

namespace modrec {

void TransmissionSchedule::validate() const {
    if (t_sync < 0) throw std::invalid_argument("schedule: t_sync must be >= 0");
    if (n_blocks < 0) throw std::invalid_argument("schedule: n_blocks must be >= 0");
    if (n_blocks > 0) {
        if (block_len <= 0) throw std::invalid_argument("schedule: block_len must be positive");
        if (pilots_per_block <= 0 || pilots_per_block > block_len)
            throw std::invalid_argument("schedule: need 0 < pilots_per_block <= block_len");
    }
}

int TransmissionSchedule::block_of(int t) const {
    if (block_len <= 0) return 0;
    if (t < t_sync) return t / block_len;
    const int sync_blocks = (t_sync + block_len - 1) / block_len;
    return sync_blocks + (t - t_sync) / block_len;
}

std::vector<ScheduledSymbol> schedule_iter(const TransmissionSchedule& sched) {
    sched.validate();
    std::vector<ScheduledSymbol> out;
    out.reserve(static_cast<std::size_t>(sched.total_symbols()));
    int t = 0;
    for (; t < sched.t_sync; ++t) out.push_back({t, SymbolRole::SyncPilot});
    for (int b = 0; b < sched.n_blocks; ++b) {
        for (int i = 0; i < sched.block_len; ++i, ++t) {
            out.push_back({t, i < sched.pilots_per_block ? SymbolRole::Pilot : SymbolRole::Data});
        }
    }
    return out;
}

}  // namespace modrec
