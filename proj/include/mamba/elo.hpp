#pragma once

#include <string>

namespace mamba::data {

inline constexpr double kEloInitial = 1500.0;
inline constexpr double kEloK = 20.0;

struct TeamState {
    std::string team_id;
    double elo = kEloInitial;
    int wins = 0;
    int losses = 0;
};

// Logistic expected score: 1 / (1 + 10^((r_b - r_a)/400)). Computed in a
// canonical orientation so elo_expected(a,b) + elo_expected(b,a) == 1 holds
// exactly in floating point.
double elo_expected(double r_a, double r_b);

// r' = r + k * (outcome - expected). The away rating is written as
// (old sum) - (new home rating), making the pair zero-sum by construction.
void elo_update(TeamState& home, TeamState& away, bool home_won, double k = kEloK);

// wins / (wins + losses), 0.5 before any game has been played.
double winning_pct(const TeamState& state);

} // namespace mamba::data
