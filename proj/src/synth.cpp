#include "mamba/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>

#include "mamba/errors.hpp"
#include "mamba/ingest.hpp"
#include "mamba/rng.hpp"

namespace mamba::synth {

using data::GameRecord;
using data::kSharedStats;
using data::Phase;
using data::PlayerGameRecord;

namespace {

double clamp(double v, double lo, double hi) {
    return std::min(hi, std::max(lo, v));
}

double logistic(double z) {
    return 1.0 / (1.0 + std::exp(-z));
}

// ISO-8601 ordinal date, e.g. "2020-035".
std::string ordinal_date(const std::string& year, int day) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%s-%03d", year.c_str(), day);
    return buf;
}

struct TeamModel {
    std::string id;
    double strength = 0.0;
    std::deque<double> recent_form; // last rolling_window realized forms
    int season_wins = 0;
    std::vector<double> player_skill; // per roster slot
};

double rolling_strength(const TeamModel& t) {
    if (t.recent_form.empty()) return t.strength;
    double acc = 0.0;
    for (double f : t.recent_form) acc += f;
    return acc / static_cast<double>(t.recent_form.size());
}

// Shared-stat block from a realized form value. Counts are rounded,
// percentage columns stay inside [0,1].
std::array<double, kSharedStats> stats_from_form(double f, double opp_f, double pts, Rng& rng) {
    auto N = [&]() { return rng.normal(); };
    std::array<double, kSharedStats> s{};
    const double fga = std::round(clamp(88.0 + 4.0 * N(), 60.0, 120.0));
    const double fg_pct = clamp(0.46 + 0.045 * f + 0.02 * N(), 0.05, 0.95);
    const double fg3a = std::round(clamp(30.0 + 3.0 * N(), 5.0, 60.0));
    const double fg3_pct = clamp(0.36 + 0.04 * f + 0.03 * N(), 0.02, 0.90);
    const double fta = std::round(clamp(22.0 + 3.0 * N(), 2.0, 50.0));
    const double ft_pct = clamp(0.77 + 0.03 * f + 0.03 * N(), 0.30, 0.99);
    const double orb = std::round(std::max(0.0, 10.0 + 1.2 * f + 1.5 * N()));
    const double drb = std::round(std::max(0.0, 33.0 + 1.5 * f + 2.0 * N()));
    s[0] = 240.0; // team minutes, constant by construction
    s[1] = std::round(fga * fg_pct);
    s[2] = fga;
    s[3] = fg_pct;
    s[4] = std::round(fg3a * fg3_pct);
    s[5] = fg3a;
    s[6] = fg3_pct;
    s[7] = std::round(fta * ft_pct);
    s[8] = fta;
    s[9] = ft_pct;
    s[10] = orb;
    s[11] = drb;
    s[12] = orb + drb;
    s[13] = std::round(std::max(0.0, 24.0 + 2.0 * f + 2.0 * N()));
    s[14] = std::round(std::max(0.0, 7.5 + 1.0 * f + 1.2 * N()));
    s[15] = std::round(std::max(0.0, 5.0 + 0.8 * f + 1.0 * N()));
    s[16] = std::round(std::max(0.0, 14.0 - 1.5 * f + 1.5 * N()));
    s[17] = std::round(std::max(0.0, 20.0 - 1.0 * f + 2.0 * N()));
    s[18] = pts;
    s[19] = clamp(0.55 + 0.05 * f + 0.02 * N(), 0.05, 0.95);
    s[20] = clamp(0.52 + 0.05 * f + 0.02 * N(), 0.05, 0.95);
    s[21] = clamp(0.35 + 0.03 * N(), 0.0, 1.0);
    s[22] = clamp(0.26 + 0.04 * N(), 0.0, 1.5);
    s[23] = clamp(0.22 + 0.02 * f + 0.02 * N(), 0.0, 1.0);
    s[24] = clamp(0.78 + 0.02 * f + 0.02 * N(), 0.0, 1.0);
    s[25] = clamp(0.50 + 0.02 * f + 0.015 * N(), 0.0, 1.0);
    s[26] = clamp(0.60 + 0.03 * f + 0.03 * N(), 0.0, 1.0);
    s[27] = clamp(0.08 + 0.010 * f + 0.008 * N(), 0.0, 1.0);
    s[28] = clamp(0.05 + 0.008 * f + 0.006 * N(), 0.0, 1.0);
    s[29] = clamp(0.13 - 0.012 * f + 0.010 * N(), 0.0, 1.0);
    s[30] = clamp(0.50 + 0.010 * N(), 0.0, 1.0);
    s[31] = 110.0 + 6.0 * f + 3.0 * N();
    s[32] = 108.0 - 4.0 * f + 2.0 * opp_f + 3.0 * N();
    return s;
}

// Starter-heavy minute allocation for a skill-ordered roster.
double base_minutes(int rank) {
    static const double schedule[] = {34, 33, 31, 29, 27, 24, 20, 16, 13, 8, 3, 2};
    return rank < 12 ? schedule[rank] : 1.0;
}

} // namespace

SynthLeague generate_league(const SynthConfig& cfg) {
    if (cfg.teams < 4) throw ContractError("synthetic league needs at least 4 teams");
    if (cfg.rounds < 1) throw ContractError("each pair must play at least one game");
    if (cfg.teams % 2 != 0) throw ContractError("team count must be even for the schedule");
    if (cfg.roster < data::kRosterSize) // need a full selectable roster
        throw ContractError("roster must hold at least " + std::to_string(data::kRosterSize) +
                            " players");

    Rng rng(cfg.seed);
    const int T = cfg.teams;

    std::vector<TeamModel> teams(static_cast<size_t>(T));
    for (int i = 0; i < T; ++i) {
        TeamModel& t = teams[static_cast<size_t>(i)];
        char name[16];
        std::snprintf(name, sizeof(name), "T%02d", i);
        t.id = name;
        // evenly spread base strengths with a little jitter
        t.strength = cfg.strength_spread * (2.0 * i / (T - 1) - 1.0) +
                     rng.normal(0.0, 0.08 * cfg.strength_spread);
        for (int j = 0; j < cfg.roster; ++j)
            t.player_skill.push_back(t.strength + rng.normal(0.0, 0.4));
    }

    SynthLeague league;
    int day = 1;
    int game_no = 0;

    auto play_game = [&](int hi, int ai, Phase phase) {
        TeamModel& home = teams[static_cast<size_t>(hi)];
        TeamModel& away = teams[static_cast<size_t>(ai)];
        const double roll_h = rolling_strength(home);
        const double roll_a = rolling_strength(away);
        const double p_home = logistic(cfg.sharpness * (roll_h - roll_a) + cfg.home_bonus);
        const bool home_win = rng.uniform() < p_home;

        const double form_h = home.strength + rng.normal(0.0, cfg.form_noise);
        const double form_a = away.strength + rng.normal(0.0, cfg.form_noise);

        const double base = clamp(105.0 + 3.0 * (form_h + form_a) + 4.0 * rng.normal(), 70.0, 150.0);
        const double mag =
            1.0 + std::floor(std::fabs(rng.normal(0.0, 6.0)) + 3.0 * std::fabs(roll_h - roll_a));
        const int away_pts = static_cast<int>(std::round(base));
        const int home_pts = away_pts + static_cast<int>(home_win ? mag : -mag);

        GameRecord g;
        char id[16];
        std::snprintf(id, sizeof(id), "G%05d", ++game_no);
        g.game_id = id;
        g.date = ordinal_date(cfg.season, day);
        g.season = cfg.season;
        g.phase = phase;
        g.home_team = home.id;
        g.away_team = away.id;
        g.home_pts = home_pts;
        g.away_pts = away_pts;
        g.home_win = home_win;
        g.home_stats = stats_from_form(form_h, form_a, home_pts, rng);
        g.away_stats = stats_from_form(form_a, form_h, away_pts, rng);
        league.true_prob.push_back(p_home);

        // per-player rows, skill-ranked minutes
        for (int side = 0; side < 2; ++side) {
            TeamModel& t = side == 0 ? home : away;
            const double form = side == 0 ? form_h : form_a;
            const double margin = (side == 0 ? 1.0 : -1.0) * (home_pts - away_pts);
            std::vector<int> order(t.player_skill.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                return t.player_skill[static_cast<size_t>(a)] >
                       t.player_skill[static_cast<size_t>(b)];
            });
            for (size_t rank = 0; rank < order.size(); ++rank) {
                const int j = order[rank];
                PlayerGameRecord pr;
                pr.game_id = g.game_id;
                char pid[24];
                std::snprintf(pid, sizeof(pid), "%s_P%02d", t.id.c_str(), j);
                pr.player_id = pid;
                pr.team_id = t.id;
                const double mp =
                    std::max(0.0, base_minutes(static_cast<int>(rank)) + rng.normal(0.0, 2.0));
                const double share = mp / 240.0;
                const double pf =
                    0.7 * form + 0.3 * t.player_skill[static_cast<size_t>(j)] + rng.normal(0.0, 0.3);
                auto full = stats_from_form(pf, 0.0, std::round(5.0 * share * base), rng);
                pr.stats = full;
                pr.stats[0] = mp;
                // counting stats scale with playing time
                for (int c : {1, 2, 4, 5, 7, 8, 10, 11, 12, 13, 14, 15, 16, 17})
                    pr.stats[static_cast<size_t>(c)] =
                        std::round(pr.stats[static_cast<size_t>(c)] * share);
                pr.plus_minus = margin * share * (0.6 + 0.4 * rng.uniform()) + rng.normal(0.0, 2.0);
                league.players.push_back(std::move(pr));
            }
        }

        // the realized form feeds future rolling windows
        for (int side = 0; side < 2; ++side) {
            TeamModel& t = side == 0 ? home : away;
            t.recent_form.push_back(side == 0 ? form_h : form_a);
            if (static_cast<int>(t.recent_form.size()) > cfg.rolling_window)
                t.recent_form.pop_front();
        }
        if (home_win) ++home.season_wins;
        else ++away.season_wins;
        league.games.push_back(std::move(g));
    };

    // Season: circle-method round robin, one matchday per date, venues
    // alternating across repetitions.
    std::vector<int> circle(static_cast<size_t>(T));
    std::iota(circle.begin(), circle.end(), 0);
    for (int rep = 0; rep < cfg.rounds; ++rep) {
        for (int md = 0; md < T - 1; ++md) {
            for (int k = 0; k < T / 2; ++k) {
                int a = circle[static_cast<size_t>(k)];
                int b = circle[static_cast<size_t>(T - 1 - k)];
                if ((md + rep) % 2 == 1) std::swap(a, b);
                play_game(a, b, Phase::season);
            }
            ++day;
            // rotate all but the first entry
            std::rotate(circle.begin() + 1, circle.end() - 1, circle.end());
        }
    }

    // Playoffs: the top half of the standings cycles through its pairings,
    // better seed at home, one game per date.
    std::vector<int> seeds(static_cast<size_t>(T));
    std::iota(seeds.begin(), seeds.end(), 0);
    std::stable_sort(seeds.begin(), seeds.end(), [&](int a, int b) {
        return teams[static_cast<size_t>(a)].season_wins > teams[static_cast<size_t>(b)].season_wins;
    });
    const int bracket = std::max(2, T / 2);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < bracket; ++i) {
        for (int j = i + 1; j < bracket; ++j)
            pairs.emplace_back(seeds[static_cast<size_t>(i)], seeds[static_cast<size_t>(j)]);
    }
    for (int g = 0; g < cfg.playoff_games; ++g) {
        const auto& [a, b] = pairs[static_cast<size_t>(g) % pairs.size()];
        play_game(a, b, Phase::playoff);
        ++day;
    }
    return league;
}

void write_league_csv(const SynthLeague& league, const std::string& games_path,
                      const std::string& players_path) {
    data::write_games_csv(games_path, league.games);
    data::write_players_csv(players_path, league.players);
}

} // namespace mamba::synth
