#include "mamba/stats_schema.hpp"

#include <cstring>

namespace mamba::data {

const std::array<const char*, kSharedStats> kStatAbbr = {
    "mp",      "fg",      "fga",     "fg_pct",  "fg3",     "fg3a",    "fg3_pct",
    "ft",      "fta",     "ft_pct",  "orb",     "drb",     "trb",     "ast",
    "stl",     "blk",     "tov",     "pf",      "pts",     "ts_pct",  "efg_pct",
    "fg3ar",   "ftr",     "orb_pct", "drb_pct", "trb_pct", "ast_pct", "stl_pct",
    "blk_pct", "tov_pct", "usg_pct", "ortg",    "drtg"};

bool stat_is_fraction(int shared_idx) {
    if (shared_idx < 0 || shared_idx >= kSharedStats) return false;
    const char* a = kStatAbbr[static_cast<size_t>(shared_idx)];
    const size_t n = std::strlen(a);
    return n > 4 && std::strcmp(a + n - 4, "_pct") == 0;
}

int stat_index(const std::string& abbr) {
    for (int i = 0; i < kSharedStats; ++i) {
        if (abbr == kStatAbbr[static_cast<size_t>(i)]) return i;
    }
    return -1;
}

} // namespace mamba::data
