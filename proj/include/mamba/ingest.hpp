#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mamba/game_data.hpp"
#include "mamba/tensor.hpp"

namespace mamba::data {

inline constexpr int kDefaultWindow = 10;
inline constexpr int kRosterSize = 10;

// Rolling window of one team's or player's statistics: n rows (oldest
// first), team schema s=35 or player schema s=34. Short histories are
// left-padded by repeating the earliest available row; `real_rows` counts
// the unpadded games. `row_dates` carries each row's source game date so
// leakage checks can audit the window.
struct StatMatrix {
    Tensor values;
    std::vector<std::string> row_dates;
    int real_rows = 0;
    bool pad_entity = false; // synthetic roster filler, zeroed by normalization
};

struct MatchupSample {
    std::string game_id;
    std::string date;
    std::string season;
    Phase phase = Phase::season;
    int label = 0; // 1 = home win
    StatMatrix home_team, away_team;
    std::vector<StatMatrix> home_players, away_players; // kRosterSize each
    std::vector<std::string> home_player_ids, away_player_ids;
};

struct SampleBuild {
    std::vector<MatchupSample> samples; // chronological
    std::vector<std::string> skipped;   // "<game_id>: reason"
};

// Replays the log chronologically, maintaining Elo ratings (carried across
// seasons) and per-season win counts, and materializes one sample per game
// from data strictly before the game's date. Games where either team has no
// prior game are skipped and logged. Each history row carries the team's
// stats for that game plus its winning percentage and Elo as of the end of
// that game.
SampleBuild build_samples(const ParsedLog& log, int window_n = kDefaultWindow);

// Top roster by total minutes over the team's last `window_n` games before
// `date`; ties break toward the lexicographically smaller player id. Exposed
// for tests; build_samples applies the same selection.
std::vector<std::string> select_top_players(const ParsedLog& log, const std::string& team,
                                            const std::string& date, int window_n);

// Per-column z-scoring, fitted on training samples only (team and player
// schemas separately). Zero-variance columns map to zero. Pad-player
// matrices are excluded from the fit and zeroed by apply.
struct NormStats {
    std::vector<double> mean, stdev;
};
struct Normalization {
    NormStats team, player;
};

Normalization normalize_fit(const std::vector<MatchupSample>& train);
MatchupSample normalize_apply(const MatchupSample& s, const Normalization& n);
std::vector<MatchupSample> normalize_apply(const std::vector<MatchupSample>& samples,
                                           const Normalization& n);
uint64_t norm_hash(const Normalization& n);

// A parsed-and-assembled dataset, optionally normalized. The binary
// container ("MNDS1") is byte-stable across runs.
struct Dataset {
    std::string tag;
    int window_n = kDefaultWindow;
    bool normalized = false;
    Normalization norm;
    std::vector<MatchupSample> samples;
};

void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

// Mean-feature design matrix: per sample, the home then away per-stat means
// over the window, restricted to `stat_subset` (0-based team-schema column
// indices). Row width is 2 * |stat_subset|.
struct BaselineData {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    int width = 0;
};
BaselineData assemble_baseline(const std::vector<MatchupSample>& samples, int window_n,
                               const std::vector<int>& stat_subset);
std::vector<double> mean_feature_row(const MatchupSample& s, const std::vector<int>& stat_subset);

// Shape gate for the full-architecture dataset: every sample must carry two
// (n x 35) team matrices and 2 x kRosterSize (n x 34) player matrices.
const std::vector<MatchupSample>& assemble_mamba(const std::vector<MatchupSample>& samples,
                                                 int window_n);

} // namespace mamba::data
