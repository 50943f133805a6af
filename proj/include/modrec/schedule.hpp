#pragma once

#include <vector>

namespace modrec {

enum class SymbolRole { SyncPilot, Pilot, Data };

/// Two-phase transmission layout: a synchronization preamble followed by
/// blocks that each start with pilots and continue with data symbols.
struct TransmissionSchedule {
    int t_sync = 0;
    int block_len = 0;
    int pilots_per_block = 0;
    int n_blocks = 0;

    void validate() const;
    int total_symbols() const { return t_sync + n_blocks * block_len; }
    int data_symbols() const { return n_blocks * (block_len - pilots_per_block); }

    /// Snapshot index of symbol t: sync symbols count as snapshot 0,
    /// tracking blocks advance one snapshot per block.
    int block_of(int t) const;
};

struct ScheduledSymbol {
    int t;
    SymbolRole role;
};

std::vector<ScheduledSymbol> schedule_iter(const TransmissionSchedule& sched);

}  // namespace modrec
