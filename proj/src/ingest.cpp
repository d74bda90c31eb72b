#include "mamba/ingest.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "mamba/elo.hpp"
#include "mamba/errors.hpp"
#include "mamba/weights_io.hpp"

namespace mamba::data {

namespace {

constexpr double kZeroVarianceEps = 1e-9;

struct HistRow {
    std::string date;
    std::vector<double> row;
};

// Last `window_n` entries of `hist` dated strictly before `date`, oldest
// first, left-padded by repeating the earliest row.
StatMatrix window_from_history(const std::vector<HistRow>& hist, const std::string& date,
                               int window_n, int cols) {
    size_t end = hist.size();
    while (end > 0 && hist[end - 1].date >= date) --end;
    if (end == 0) throw DegenerateInputError("no prior games before " + date);
    const size_t start = end >= static_cast<size_t>(window_n) ? end - window_n : 0;
    const int real = static_cast<int>(end - start);
    const int padding = window_n - real;

    StatMatrix m;
    m.values = Tensor({window_n, cols});
    m.row_dates.resize(static_cast<size_t>(window_n));
    m.real_rows = real;
    for (int r = 0; r < window_n; ++r) {
        const HistRow& src = hist[start + static_cast<size_t>(std::max(0, r - padding))];
        for (int c = 0; c < cols; ++c) m.values.at(r, c) = src.row[static_cast<size_t>(c)];
        m.row_dates[static_cast<size_t>(r)] = src.date;
    }
    return m;
}

StatMatrix pad_player_matrix(int window_n) {
    StatMatrix m;
    m.values = Tensor({window_n, kPlayerStats});
    m.row_dates.assign(static_cast<size_t>(window_n), "");
    m.real_rows = 0;
    m.pad_entity = true;
    return m;
}

std::vector<std::string> rank_roster(std::unordered_map<std::string, double>& minutes) {
    std::vector<std::pair<std::string, double>> ranked(minutes.begin(), minutes.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> ids;
    for (size_t i = 0; i < ranked.size() && i < static_cast<size_t>(kRosterSize); ++i)
        ids.push_back(ranked[i].first);
    return ids;
}

} // namespace

SampleBuild build_samples(const ParsedLog& log, int window_n) {
    if (window_n < 1) throw ContractError("window_n must be >= 1");

    std::unordered_map<std::string, std::vector<const PlayerGameRecord*>> players_by_game;
    for (const PlayerGameRecord& p : log.players) players_by_game[p.game_id].push_back(&p);

    std::unordered_map<std::string, std::vector<HistRow>> team_hist, player_hist;
    std::unordered_map<std::string, std::vector<std::pair<std::string, std::string>>>
        team_games; // (date, game_id)
    std::unordered_map<std::string, TeamState> states;
    std::unordered_map<std::string, std::string> team_season;

    SampleBuild out;
    for (const GameRecord& g : log.games) {
        // 1. materialize the sample from state strictly before this game
        const auto hh = team_hist.find(g.home_team);
        const auto ah = team_hist.find(g.away_team);
        auto prior_count = [&](const std::unordered_map<std::string, std::vector<HistRow>>::iterator
                                   it) {
            if (it == team_hist.end()) return size_t{0};
            size_t end = it->second.size();
            while (end > 0 && it->second[end - 1].date >= g.date) --end;
            return end;
        };
        const size_t home_prior = prior_count(hh);
        const size_t away_prior = prior_count(ah);
        if (home_prior == 0 || away_prior == 0) {
            out.skipped.push_back(g.game_id + ": " +
                                  (home_prior == 0 ? g.home_team : g.away_team) +
                                  " has no prior games");
        } else {
            MatchupSample s;
            s.game_id = g.game_id;
            s.date = g.date;
            s.season = g.season;
            s.phase = g.phase;
            s.label = g.home_win ? 1 : 0;
            s.home_team = window_from_history(hh->second, g.date, window_n, kTeamStats);
            s.away_team = window_from_history(ah->second, g.date, window_n, kTeamStats);

            for (int side = 0; side < 2; ++side) {
                const std::string& team = side == 0 ? g.home_team : g.away_team;
                auto& mats = side == 0 ? s.home_players : s.away_players;
                auto& ids = side == 0 ? s.home_player_ids : s.away_player_ids;

                // candidate minutes over the team's window games
                const auto& games = team_games[team];
                size_t end = games.size();
                while (end > 0 && games[end - 1].first >= g.date) --end;
                const size_t start = end >= static_cast<size_t>(window_n) ? end - window_n : 0;
                std::unordered_map<std::string, double> minutes;
                for (size_t i = start; i < end; ++i) {
                    auto it = players_by_game.find(games[i].second);
                    if (it == players_by_game.end()) continue;
                    for (const PlayerGameRecord* p : it->second) {
                        if (p->team_id == team) minutes[p->player_id] += p->stats[0];
                    }
                }
                ids = rank_roster(minutes);
                for (const std::string& pid : ids)
                    mats.push_back(window_from_history(player_hist.at(pid), g.date, window_n,
                                                       kPlayerStats));
                for (size_t k = ids.size(); k < static_cast<size_t>(kRosterSize); ++k) {
                    ids.push_back("PAD:" + std::to_string(k));
                    mats.push_back(pad_player_matrix(window_n));
                }
            }
            out.samples.push_back(std::move(s));
        }

        // 2. advance state with this game's outcome
        TeamState& home = states.try_emplace(g.home_team, TeamState{g.home_team}).first->second;
        TeamState& away = states.try_emplace(g.away_team, TeamState{g.away_team}).first->second;
        for (TeamState* t : {&home, &away}) {
            auto& season = team_season[t->team_id];
            if (season != g.season) {
                season = g.season;
                t->wins = 0;
                t->losses = 0;
            }
        }
        elo_update(home, away, g.home_win);
        (g.home_win ? home.wins : home.losses) += 1;
        (g.home_win ? away.losses : away.wins) += 1;

        // 3. append history rows carrying end-of-game winning pct and Elo
        for (int side = 0; side < 2; ++side) {
            const auto& stats = side == 0 ? g.home_stats : g.away_stats;
            TeamState& t = side == 0 ? home : away;
            HistRow row;
            row.date = g.date;
            row.row.assign(stats.begin(), stats.end());
            row.row.push_back(winning_pct(t));
            row.row.push_back(t.elo);
            team_hist[t.team_id].push_back(std::move(row));
            team_games[t.team_id].emplace_back(g.date, g.game_id);
        }
        auto it = players_by_game.find(g.game_id);
        if (it != players_by_game.end()) {
            for (const PlayerGameRecord* p : it->second) {
                HistRow row;
                row.date = g.date;
                row.row.assign(p->stats.begin(), p->stats.end());
                row.row.push_back(p->plus_minus);
                player_hist[p->player_id].push_back(std::move(row));
            }
        }
    }
    return out;
}

std::vector<std::string> select_top_players(const ParsedLog& log, const std::string& team,
                                            const std::string& date, int window_n) {
    std::vector<std::pair<std::string, std::string>> games; // (date, game_id)
    for (const GameRecord& g : log.games) {
        if (g.date < date && (g.home_team == team || g.away_team == team))
            games.emplace_back(g.date, g.game_id);
    }
    std::sort(games.begin(), games.end());
    if (games.empty()) throw DegenerateInputError(team + " has no games before " + date);
    const size_t start = games.size() >= static_cast<size_t>(window_n)
                             ? games.size() - static_cast<size_t>(window_n)
                             : 0;
    std::unordered_map<std::string, double> minutes;
    for (size_t i = start; i < games.size(); ++i) {
        for (const PlayerGameRecord& p : log.players) {
            if (p.game_id == games[i].second && p.team_id == team)
                minutes[p.player_id] += p.stats[0];
        }
    }
    return rank_roster(minutes);
}

namespace {

void accumulate_matrix(const StatMatrix& m, std::vector<double>& sum, std::vector<double>& sumsq,
                       size_t& count) {
    const int rows = m.values.dim(0), cols = m.values.dim(1);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double v = m.values.at(r, c);
            sum[static_cast<size_t>(c)] += v;
            sumsq[static_cast<size_t>(c)] += v * v;
        }
    }
    count += static_cast<size_t>(rows);
}

NormStats finalize_stats(const std::vector<double>& sum, const std::vector<double>& sumsq,
                         size_t count) {
    NormStats ns;
    ns.mean.resize(sum.size());
    ns.stdev.resize(sum.size());
    for (size_t c = 0; c < sum.size(); ++c) {
        const double mean = sum[c] / static_cast<double>(count);
        const double var = std::max(0.0, sumsq[c] / static_cast<double>(count) - mean * mean);
        ns.mean[c] = mean;
        ns.stdev[c] = std::sqrt(var);
    }
    return ns;
}

void apply_stats(StatMatrix& m, const NormStats& ns) {
    const int rows = m.values.dim(0), cols = m.values.dim(1);
    if (static_cast<size_t>(cols) != ns.mean.size())
        throw ContractError("normalization constants for " + std::to_string(ns.mean.size()) +
                            " columns applied to a " + std::to_string(cols) + "-column matrix");
    if (m.pad_entity) {
        m.values = Tensor({rows, cols}); // the normalized mean, i.e. all zeros
        return;
    }
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double sd = ns.stdev[static_cast<size_t>(c)];
            m.values.at(r, c) =
                sd < kZeroVarianceEps ? 0.0
                                      : (m.values.at(r, c) - ns.mean[static_cast<size_t>(c)]) / sd;
        }
    }
}

} // namespace

Normalization normalize_fit(const std::vector<MatchupSample>& train) {
    if (train.empty()) throw ContractError("normalize_fit on an empty training set");
    std::vector<double> tsum(kTeamStats, 0.0), tsq(kTeamStats, 0.0);
    std::vector<double> psum(kPlayerStats, 0.0), psq(kPlayerStats, 0.0);
    size_t tcount = 0, pcount = 0;
    for (const MatchupSample& s : train) {
        accumulate_matrix(s.home_team, tsum, tsq, tcount);
        accumulate_matrix(s.away_team, tsum, tsq, tcount);
        for (const auto* side : {&s.home_players, &s.away_players}) {
            for (const StatMatrix& m : *side) {
                if (!m.pad_entity) accumulate_matrix(m, psum, psq, pcount);
            }
        }
    }
    Normalization n;
    n.team = finalize_stats(tsum, tsq, tcount);
    if (pcount > 0) n.player = finalize_stats(psum, psq, pcount);
    else {
        n.player.mean.assign(kPlayerStats, 0.0);
        n.player.stdev.assign(kPlayerStats, 0.0);
    }
    return n;
}

MatchupSample normalize_apply(const MatchupSample& s, const Normalization& n) {
    MatchupSample out = s;
    apply_stats(out.home_team, n.team);
    apply_stats(out.away_team, n.team);
    for (auto* side : {&out.home_players, &out.away_players}) {
        for (StatMatrix& m : *side) apply_stats(m, n.player);
    }
    return out;
}

std::vector<MatchupSample> normalize_apply(const std::vector<MatchupSample>& samples,
                                           const Normalization& n) {
    std::vector<MatchupSample> out;
    out.reserve(samples.size());
    for (const MatchupSample& s : samples) out.push_back(normalize_apply(s, n));
    return out;
}

uint64_t norm_hash(const Normalization& n) {
    uint64_t h = 14695981039346656037ULL;
    for (const NormStats* ns : {&n.team, &n.player}) {
        h = fnv1a_bytes(ns->mean.data(), ns->mean.size() * sizeof(double), h);
        h = fnv1a_bytes(ns->stdev.data(), ns->stdev.size() * sizeof(double), h);
    }
    return h;
}

namespace {

void write_norm_stats(std::ostream& out, const NormStats& ns) {
    wire::put_u32(out, static_cast<uint32_t>(ns.mean.size()));
    for (double v : ns.mean) wire::put_f64(out, v);
    for (double v : ns.stdev) wire::put_f64(out, v);
}

NormStats read_norm_stats(std::istream& in) {
    NormStats ns;
    const uint32_t n = wire::get_u32(in);
    if (n > 4096) throw IoError("corrupt normalization block");
    ns.mean.resize(n);
    ns.stdev.resize(n);
    for (auto* v : {&ns.mean, &ns.stdev}) {
        for (uint32_t i = 0; i < n; ++i) (*v)[i] = wire::get_f64(in);
    }
    return ns;
}

void write_matrix(std::ostream& out, const StatMatrix& m) {
    wire::put_u32(out, static_cast<uint32_t>(m.values.dim(0)));
    wire::put_u32(out, static_cast<uint32_t>(m.values.dim(1)));
    wire::put_u8(out, m.pad_entity ? 1 : 0);
    wire::put_u32(out, static_cast<uint32_t>(m.real_rows));
    for (size_t i = 0; i < m.values.size(); ++i) wire::put_f64(out, m.values[i]);
    for (const std::string& d : m.row_dates) wire::put_string(out, d);
}

StatMatrix read_matrix(std::istream& in) {
    StatMatrix m;
    const uint32_t rows = wire::get_u32(in);
    const uint32_t cols = wire::get_u32(in);
    if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096) throw IoError("corrupt matrix header");
    m.pad_entity = wire::get_u8(in) != 0;
    m.real_rows = static_cast<int>(wire::get_u32(in));
    std::vector<double> data(static_cast<size_t>(rows) * cols);
    for (double& v : data) v = wire::get_f64(in);
    m.values = Tensor({static_cast<int>(rows), static_cast<int>(cols)}, std::move(data));
    m.row_dates.resize(rows);
    for (std::string& d : m.row_dates) d = wire::get_string(in);
    return m;
}

constexpr char kDatasetMagic[] = "MNDS1";

} // namespace

void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kDatasetMagic, 5);
    wire::put_u32(out, 1); // version
    wire::put_string(out, ds.tag);
    wire::put_u32(out, static_cast<uint32_t>(ds.window_n));
    wire::put_u8(out, ds.normalized ? 1 : 0);
    write_norm_stats(out, ds.norm.team);
    write_norm_stats(out, ds.norm.player);
    wire::put_u64(out, ds.samples.size());
    for (const MatchupSample& s : ds.samples) {
        wire::put_string(out, s.game_id);
        wire::put_string(out, s.date);
        wire::put_string(out, s.season);
        wire::put_u8(out, s.phase == Phase::playoff ? 1 : 0);
        wire::put_u8(out, static_cast<uint8_t>(s.label));
        write_matrix(out, s.home_team);
        write_matrix(out, s.away_team);
        for (const auto* side : {&s.home_players, &s.away_players}) {
            wire::put_u32(out, static_cast<uint32_t>(side->size()));
            for (const StatMatrix& m : *side) write_matrix(out, m);
        }
        for (const auto* ids : {&s.home_player_ids, &s.away_player_ids}) {
            for (const std::string& id : *ids) wire::put_string(out, id);
        }
    }
    if (!out) throw IoError("dataset write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, kDatasetMagic, 5) != 0)
        throw IoError("'" + path + "' is not a MNDS1 dataset container");
    if (wire::get_u32(in) != 1) throw IoError("unsupported dataset version");
    Dataset ds;
    ds.tag = wire::get_string(in);
    ds.window_n = static_cast<int>(wire::get_u32(in));
    ds.normalized = wire::get_u8(in) != 0;
    ds.norm.team = read_norm_stats(in);
    ds.norm.player = read_norm_stats(in);
    const uint64_t count = wire::get_u64(in);
    if (count > (1ULL << 32)) throw IoError("corrupt sample count");
    ds.samples.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        MatchupSample s;
        s.game_id = wire::get_string(in);
        s.date = wire::get_string(in);
        s.season = wire::get_string(in);
        s.phase = wire::get_u8(in) ? Phase::playoff : Phase::season;
        s.label = wire::get_u8(in);
        s.home_team = read_matrix(in);
        s.away_team = read_matrix(in);
        for (auto* side : {&s.home_players, &s.away_players}) {
            const uint32_t np = wire::get_u32(in);
            if (np > 256) throw IoError("corrupt player count");
            for (uint32_t p = 0; p < np; ++p) side->push_back(read_matrix(in));
        }
        for (auto* ids : {&s.home_player_ids, &s.away_player_ids}) {
            const auto& side = ids == &s.home_player_ids ? s.home_players : s.away_players;
            ids->resize(side.size());
            for (std::string& id : *ids) id = wire::get_string(in);
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

std::vector<double> mean_feature_row(const MatchupSample& s, const std::vector<int>& stat_subset) {
    std::vector<double> row;
    row.reserve(2 * stat_subset.size());
    for (const StatMatrix* m : {&s.home_team, &s.away_team}) {
        const int rows = m->values.dim(0);
        for (int c : stat_subset) {
            double acc = 0.0;
            for (int r = 0; r < rows; ++r) acc += m->values.at(r, c);
            row.push_back(acc / rows);
        }
    }
    return row;
}

BaselineData assemble_baseline(const std::vector<MatchupSample>& samples, int window_n,
                               const std::vector<int>& stat_subset) {
    if (stat_subset.empty()) throw ContractError("empty stat subset");
    for (int c : stat_subset) {
        if (c < 0 || c >= kTeamStats)
            throw ContractError("stat index " + std::to_string(c) + " outside the team schema");
    }
    BaselineData out;
    out.width = 2 * static_cast<int>(stat_subset.size());
    out.rows.reserve(samples.size());
    out.labels.reserve(samples.size());
    for (const MatchupSample& s : samples) {
        if (s.home_team.values.dim(0) != window_n || s.away_team.values.dim(0) != window_n)
            throw ContractError("sample " + s.game_id + " window does not match n=" +
                                std::to_string(window_n));
        out.rows.push_back(mean_feature_row(s, stat_subset));
        out.labels.push_back(s.label);
    }
    return out;
}

const std::vector<MatchupSample>& assemble_mamba(const std::vector<MatchupSample>& samples,
                                                 int window_n) {
    for (const MatchupSample& s : samples) {
        auto check = [&](const Tensor& m, int cols, const char* what) {
            if (m.ndim() != 2 || m.dim(0) != window_n || m.dim(1) != cols)
                throw ContractError("sample " + s.game_id + ": " + what + " matrix is " +
                                    m.shape_string() + ", expected [" + std::to_string(window_n) +
                                    ", " + std::to_string(cols) + "]");
        };
        check(s.home_team.values, kTeamStats, "home team");
        check(s.away_team.values, kTeamStats, "away team");
        if (s.home_players.size() != kRosterSize || s.away_players.size() != kRosterSize)
            throw ContractError("sample " + s.game_id + ": expected " +
                                std::to_string(kRosterSize) + " player matrices per side");
        for (const auto* side : {&s.home_players, &s.away_players}) {
            for (const StatMatrix& m : *side) check(m.values, kPlayerStats, "player");
        }
    }
    return samples;
}

} // namespace mamba::data
