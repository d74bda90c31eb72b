#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mamba/game_data.hpp"

namespace mamba::synth {

// Planted-signal league. Every team has a latent base strength; each game
// realizes a noisy "form" around it, box-score stats are linear views of
// that form, and the home-win probability is a logistic function of the
// teams' rolling-window mean form difference plus a home bonus. Models that
// aggregate recent stat windows can therefore recover the outcome signal,
// and the generator keeps the true per-game win probability for oracle
// checks.
struct SynthConfig {
    int teams = 8;
    int rounds = 2;        // games per unordered pair during the season
    int playoff_games = 15;
    int roster = 12;
    uint64_t seed = 3;
    std::string season = "2020";

    double strength_spread = 1.2; // base strengths span [-spread, +spread]
    double form_noise = 0.25;
    double sharpness = 3.0;  // logistic slope on the rolling form difference
    double home_bonus = 0.4; // logit units
    int rolling_window = 10;
};

struct SynthLeague {
    std::vector<data::GameRecord> games; // chronological
    std::vector<data::PlayerGameRecord> players;
    std::vector<double> true_prob; // per game, the generator's home-win probability
};

SynthLeague generate_league(const SynthConfig& cfg);

void write_league_csv(const SynthLeague& league, const std::string& games_path,
                      const std::string& players_path);

} // namespace mamba::synth
