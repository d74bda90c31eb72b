#include "mamba/elo.hpp"

#include <cmath>

#include "mamba/errors.hpp"

namespace mamba::data {

double elo_expected(double r_a, double r_b) {
    if (!std::isfinite(r_a) || !std::isfinite(r_b)) throw ContractError("non-finite Elo rating");
    if (r_a == r_b) return 0.5;
    if (r_a < r_b) return 1.0 - elo_expected(r_b, r_a);
    return 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0));
}

void elo_update(TeamState& home, TeamState& away, bool home_won, double k) {
    if (k <= 0.0) throw ContractError("Elo K factor must be positive");
    const double sum = home.elo + away.elo;
    const double expected = elo_expected(home.elo, away.elo);
    const double outcome = home_won ? 1.0 : 0.0;
    home.elo += k * (outcome - expected);
    away.elo = sum - home.elo;
}

double winning_pct(const TeamState& state) {
    const int played = state.wins + state.losses;
    return played == 0 ? 0.5 : static_cast<double>(state.wins) / played;
}

} // namespace mamba::data
