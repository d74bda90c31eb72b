#include "mamba/game_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "mamba/errors.hpp"

namespace mamba::data {

const char* phase_name(Phase p) {
    return p == Phase::season ? "season" : "playoff";
}

namespace {

constexpr const char* kPlayoffSuffix = ":playoff";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

[[noreturn]] void row_error(const std::string& path, size_t row, const std::string& msg) {
    throw ParseError(path + ":" + std::to_string(row) + ": " + msg);
}

double parse_stat(const std::string& path, size_t row, const std::string& field,
                  const std::string& text) {
    try {
        size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing junk");
        if (!std::isfinite(v)) row_error(path, row, "non-finite value in column " + field);
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        row_error(path, row, "cannot parse '" + text + "' in column " + field);
    }
}

int parse_int(const std::string& path, size_t row, const std::string& field,
              const std::string& text) {
    try {
        size_t pos = 0;
        const int v = std::stoi(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        row_error(path, row, "cannot parse integer '" + text + "' in column " + field);
    }
}

std::string expected_games_header() {
    std::string h = "game_id,date,season,home_team,away_team,home_pts,away_pts";
    for (const char* side : {"h_", "a_"}) {
        for (const char* abbr : kStatAbbr) h += std::string(",") + side + abbr;
    }
    return h;
}

std::string expected_players_header() {
    std::string h = "game_id,player_id,team_id";
    for (const char* abbr : kStatAbbr) h += std::string(",") + abbr;
    h += ",plus_minus";
    return h;
}

std::string read_header_line(std::ifstream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file, header expected");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace

std::vector<GameRecord> parse_games_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    const std::string want = expected_games_header();
    if (read_header_line(in, path) != want)
        throw ParseError(path + ": header does not match the games schema");

    std::vector<GameRecord> games;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7 + 2 * kSharedStats)
            row_error(path, row, "expected " + std::to_string(7 + 2 * kSharedStats) +
                                     " columns, got " + std::to_string(f.size()));
        GameRecord g;
        g.game_id = f[0];
        g.date = f[1];
        g.season = f[2];
        if (g.season.size() > std::strlen(kPlayoffSuffix) &&
            g.season.ends_with(kPlayoffSuffix)) {
            g.phase = Phase::playoff;
            g.season.resize(g.season.size() - std::strlen(kPlayoffSuffix));
        }
        g.home_team = f[3];
        g.away_team = f[4];
        if (g.game_id.empty() || g.date.empty() || g.home_team.empty() || g.away_team.empty())
            row_error(path, row, "empty identifier column");
        if (!seen_ids.insert(g.game_id).second)
            row_error(path, row, "duplicate game_id '" + g.game_id + "'");
        g.home_pts = parse_int(path, row, "home_pts", f[5]);
        g.away_pts = parse_int(path, row, "away_pts", f[6]);
        if (g.home_pts == g.away_pts)
            row_error(path, row, "tied score " + std::to_string(g.home_pts) +
                                     "-" + std::to_string(g.away_pts) + "; home-win label undefined");
        g.home_win = g.home_pts > g.away_pts;
        for (int side = 0; side < 2; ++side) {
            auto& stats = side == 0 ? g.home_stats : g.away_stats;
            for (int i = 0; i < kSharedStats; ++i) {
                const std::string field =
                    std::string(side == 0 ? "h_" : "a_") + kStatAbbr[static_cast<size_t>(i)];
                const double v =
                    parse_stat(path, row, field, f[static_cast<size_t>(7 + side * kSharedStats + i)]);
                if (stat_is_fraction(i) && (v < 0.0 || v > 1.0))
                    row_error(path, row, "percentage " + field + "=" + f[static_cast<size_t>(
                                              7 + side * kSharedStats + i)] +
                                              " outside [0,1]");
                stats[static_cast<size_t>(i)] = v;
            }
        }
        games.push_back(std::move(g));
    }
    std::sort(games.begin(), games.end(), [](const GameRecord& a, const GameRecord& b) {
        return a.date != b.date ? a.date < b.date : a.game_id < b.game_id;
    });
    return games;
}

std::vector<PlayerGameRecord> parse_players_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    if (read_header_line(in, path) != expected_players_header())
        throw ParseError(path + ": header does not match the players schema");

    std::vector<PlayerGameRecord> players;
    std::string line;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4 + kSharedStats)
            row_error(path, row, "expected " + std::to_string(4 + kSharedStats) +
                                     " columns, got " + std::to_string(f.size()));
        PlayerGameRecord p;
        p.game_id = f[0];
        p.player_id = f[1];
        p.team_id = f[2];
        if (p.game_id.empty() || p.player_id.empty() || p.team_id.empty())
            row_error(path, row, "empty identifier column");
        for (int i = 0; i < kSharedStats; ++i) {
            const std::string field = kStatAbbr[static_cast<size_t>(i)];
            const double v = parse_stat(path, row, field, f[static_cast<size_t>(3 + i)]);
            if (stat_is_fraction(i) && (v < 0.0 || v > 1.0))
                row_error(path, row, "percentage " + field + " outside [0,1]");
            p.stats[static_cast<size_t>(i)] = v;
        }
        if (p.stats[0] < 0.0) row_error(path, row, "negative minutes played");
        p.plus_minus = parse_stat(path, row, "plus_minus", f.back());
        players.push_back(std::move(p));
    }
    return players;
}

ParsedLog parse_game_log(const std::string& games_path, const std::string& players_path) {
    ParsedLog log;
    log.games = parse_games_csv(games_path);
    log.players = parse_players_csv(players_path);
    std::unordered_set<std::string> ids;
    for (const GameRecord& g : log.games) ids.insert(g.game_id);
    for (size_t i = 0; i < log.players.size(); ++i) {
        if (!ids.count(log.players[i].game_id))
            throw ParseError(players_path + ": row " + std::to_string(i + 2) +
                             ": player record references unknown game '" + log.players[i].game_id +
                             "'");
    }
    return log;
}

namespace {

std::string fmt_stat(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

void write_games_csv(const std::string& path, const std::vector<GameRecord>& games) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << expected_games_header() << "\n";
    for (const GameRecord& g : games) {
        out << g.game_id << ',' << g.date << ',' << g.season
            << (g.phase == Phase::playoff ? kPlayoffSuffix : "") << ',' << g.home_team << ','
            << g.away_team << ',' << g.home_pts << ',' << g.away_pts;
        for (const auto* stats : {&g.home_stats, &g.away_stats}) {
            for (double v : *stats) out << ',' << fmt_stat(v);
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

void write_players_csv(const std::string& path, const std::vector<PlayerGameRecord>& players) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << expected_players_header() << "\n";
    for (const PlayerGameRecord& p : players) {
        out << p.game_id << ',' << p.player_id << ',' << p.team_id;
        for (double v : p.stats) out << ',' << fmt_stat(v);
        out << ',' << fmt_stat(p.plus_minus) << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace mamba::data
