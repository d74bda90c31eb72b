#pragma once

#include <array>
#include <string>
#include <vector>

#include "mamba/stats_schema.hpp"

namespace mamba::data {

enum class Phase { season, playoff };
const char* phase_name(Phase p);

// One game from games.csv. The season column may carry a ":playoff" suffix
// marking postseason games; `season` keeps the bare tag. The home-win label
// is derived from the final scores.
struct GameRecord {
    std::string game_id;
    std::string date; // ISO-8601, compared lexicographically
    std::string season;
    Phase phase = Phase::season;
    std::string home_team, away_team;
    int home_pts = 0, away_pts = 0;
    std::array<double, kSharedStats> home_stats{};
    std::array<double, kSharedStats> away_stats{};
    bool home_win = false;
};

struct PlayerGameRecord {
    std::string game_id;
    std::string player_id;
    std::string team_id;
    std::array<double, kSharedStats> stats{};
    double plus_minus = 0.0;
};

struct ParsedLog {
    std::vector<GameRecord> games;     // sorted by (date, game_id)
    std::vector<PlayerGameRecord> players;
};

// games.csv: game_id,date,season,home_team,away_team,home_pts,away_pts,
//            h_<abbr> x33, a_<abbr> x33
// players.csv: game_id,player_id,team_id, <abbr> x33, plus_minus
// Validation failures carry the 1-based file row number.
std::vector<GameRecord> parse_games_csv(const std::string& path);
std::vector<PlayerGameRecord> parse_players_csv(const std::string& path);

// Parses both files, sorts games chronologically and checks that every
// player row references an existing game.
ParsedLog parse_game_log(const std::string& games_path, const std::string& players_path);

void write_games_csv(const std::string& path, const std::vector<GameRecord>& games);
void write_players_csv(const std::string& path, const std::vector<PlayerGameRecord>& players);

} // namespace mamba::data
