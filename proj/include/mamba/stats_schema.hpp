#pragma once

#include <array>
#include <string>

namespace mamba::data {

// Shared box-score statistics, in the fixed schema order that every stat
// matrix and weights file relies on.
inline constexpr int kSharedStats = 33;
// Team schema appends winning percentage and Elo rating.
inline constexpr int kTeamStats = 35;
// Player schema appends plus/minus.
inline constexpr int kPlayerStats = 34;

inline constexpr int kWinPctCol = 33;
inline constexpr int kEloCol = 34;
inline constexpr int kPlusMinusCol = 33;

extern const std::array<const char*, kSharedStats> kStatAbbr;

// Columns validated to lie in [0,1] at parse time: every *_pct column.
// Attempt rates (fg3ar, ftr) are ratios and stay unbounded.
bool stat_is_fraction(int shared_idx);

int stat_index(const std::string& abbr); // -1 when unknown

} // namespace mamba::data
