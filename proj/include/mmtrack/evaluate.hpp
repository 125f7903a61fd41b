#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmtrack/core.hpp"

namespace mmtrack {

struct TruthRow {
    int64_t tick = 0;
    std::string actor;
    double x = 0, y = 0, z = 0;
    StatusLabel status = StatusLabel::Standing;
};

struct PredictionRow {
    int64_t tick = 0;
    int track_id = 0;
    double x = 0, y = 0, z = 0;
    std::string state;
    StatusLabel status = StatusLabel::Standing;
};

namespace detail {

inline std::vector<std::string> splitCsv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    return out;
}

}  // namespace detail

inline std::vector<TruthRow> loadTruth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open truth: " + path);
    std::vector<TruthRow> rows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 || line.empty()) continue;  // header
        const auto f = detail::splitCsv(line);
        if (f.size() != 6)
            throw ParseError("truth line " + std::to_string(lineno) + ": expected 6 fields");
        TruthRow r;
        try {
            r.tick = std::stoll(f[0]);
            r.actor = f[1];
            r.x = std::stod(f[2]);
            r.y = std::stod(f[3]);
            r.z = std::stod(f[4]);
            r.status = statusFromString(f[5]);
        } catch (const std::exception& e) {
            throw ParseError("truth line " + std::to_string(lineno) + ": " + e.what());
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::vector<PredictionRow> loadTrajectories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trajectories: " + path);
    std::vector<PredictionRow> rows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 || line.empty()) continue;
        const auto f = detail::splitCsv(line);
        if (f.size() != 7)
            throw ParseError("trajectory line " + std::to_string(lineno) +
                             ": expected 7 fields");
        PredictionRow r;
        try {
            r.tick = std::stoll(f[0]);
            r.track_id = std::stoi(f[1]);
            r.x = std::stod(f[2]);
            r.y = std::stod(f[3]);
            r.z = std::stod(f[4]);
            r.state = f[5];
            r.status = statusFromString(f[6]);
        } catch (const std::exception& e) {
            throw ParseError("trajectory line " + std::to_string(lineno) + ": " + e.what());
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

struct EvalConfig {
    double max_centroid_distance = 0.25;  // m, ground plane
    double min_overlap = 0.7;             // intersection over the truth footprint
    double footprint_side = 0.5;          // m, square around either centroid
};

struct EvalResult {
    int64_t truth_ticks = 0;
    int64_t truth_instances = 0;
    int64_t predicted_instances = 0;
    int64_t true_positives = 0;
    int64_t false_negatives = 0;
    int64_t false_positives = 0;
    double sensitivity = 1.0;
    double precision = 1.0;
    int64_t confusion[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};  // [truth][pred]
    double status_accuracy = 1.0;
    std::map<std::string, double> per_actor_sensitivity;

    json toJson() const {
        json cm = json::array();
        for (int i = 0; i < 3; ++i) cm.push_back({confusion[i][0], confusion[i][1], confusion[i][2]});
        return json{{"truth_ticks", truth_ticks},
                    {"truth_instances", truth_instances},
                    {"predicted_instances", predicted_instances},
                    {"true_positives", true_positives},
                    {"false_negatives", false_negatives},
                    {"false_positives", false_positives},
                    {"sensitivity", sensitivity},
                    {"precision", precision},
                    {"status_confusion", cm},
                    {"status_accuracy", status_accuracy},
                    {"per_actor_sensitivity", per_actor_sensitivity}};
    }
};

// A truth instance and a prediction can pair when their ground-plane centroids
// are close and a square footprint around the prediction covers most of the
// same square around the truth.
inline bool matchFeasible(const TruthRow& t, const PredictionRow& p, const EvalConfig& cfg) {
    const double dx = std::abs(t.x - p.x);
    const double dy = std::abs(t.y - p.y);
    if (std::hypot(dx, dy) > cfg.max_centroid_distance) return false;
    const double side = cfg.footprint_side;
    const double ox = std::max(0.0, side - dx);
    const double oy = std::max(0.0, side - dy);
    return (ox * oy) / (side * side) >= cfg.min_overlap;
}

namespace detail {

// Kuhn's augmenting-path maximum matching on the feasibility graph of one tick.
inline int maxMatching(const std::vector<std::vector<bool>>& feasible, std::vector<int>& match_t,
                       std::vector<int>& match_p) {
    const int nt = static_cast<int>(feasible.size());
    const int np = nt == 0 ? 0 : static_cast<int>(feasible[0].size());
    match_t.assign(nt, -1);
    match_p.assign(np, -1);
    int matched = 0;

    std::vector<char> visited;
    std::function<bool(int)> augment = [&](int t) -> bool {
        for (int p = 0; p < np; ++p) {
            if (!feasible[t][p] || visited[p]) continue;
            visited[p] = 1;
            if (match_p[p] < 0 || augment(match_p[p])) {
                match_p[p] = t;
                match_t[t] = p;
                return true;
            }
        }
        return false;
    };
    for (int t = 0; t < nt; ++t) {
        visited.assign(np, 0);
        if (augment(t)) ++matched;
    }
    return matched;
}

}  // namespace detail

inline EvalResult evaluate(const std::vector<TruthRow>& truth,
                           const std::vector<PredictionRow>& predictions,
                           const EvalConfig& cfg = {}) {
    if (truth.empty()) throw AlignmentError("truth is empty: nothing to evaluate against");

    std::map<int64_t, std::vector<const TruthRow*>> truth_by_tick;
    int64_t max_tick = 0;
    for (const auto& r : truth) {
        truth_by_tick[r.tick].push_back(&r);
        max_tick = std::max(max_tick, r.tick);
    }
    std::map<int64_t, std::vector<const PredictionRow*>> pred_by_tick;
    for (const auto& r : predictions) {
        if (r.tick > max_tick)
            throw AlignmentError("prediction at tick " + std::to_string(r.tick) +
                                 " lies beyond the truth horizon " + std::to_string(max_tick));
        pred_by_tick[r.tick].push_back(&r);
    }

    EvalResult res;
    res.truth_ticks = static_cast<int64_t>(truth_by_tick.size());
    res.predicted_instances = static_cast<int64_t>(predictions.size());
    std::map<std::string, std::pair<int64_t, int64_t>> actor_counts;  // matched, total

    for (const auto& [tick, trows] : truth_by_tick) {
        res.truth_instances += static_cast<int64_t>(trows.size());
        const auto pit = pred_by_tick.find(tick);
        const std::vector<const PredictionRow*> prows =
            pit == pred_by_tick.end() ? std::vector<const PredictionRow*>{} : pit->second;

        std::vector<std::vector<bool>> feasible(trows.size(),
                                                std::vector<bool>(prows.size(), false));
        for (size_t i = 0; i < trows.size(); ++i)
            for (size_t j = 0; j < prows.size(); ++j)
                feasible[i][j] = matchFeasible(*trows[i], *prows[j], cfg);

        std::vector<int> match_t, match_p;
        const int matched = detail::maxMatching(feasible, match_t, match_p);
        res.true_positives += matched;
        res.false_negatives += static_cast<int64_t>(trows.size()) - matched;
        res.false_positives += static_cast<int64_t>(prows.size()) - matched;

        for (size_t i = 0; i < trows.size(); ++i) {
            auto& [hit, total] = actor_counts[trows[i]->actor];
            ++total;
            if (match_t[i] >= 0) {
                ++hit;
                ++res.confusion[static_cast<int>(trows[i]->status)]
                               [static_cast<int>(prows[match_t[i]]->status)];
            }
        }
    }

    const int64_t p = res.true_positives + res.false_negatives;
    res.sensitivity = p == 0 ? 1.0 : static_cast<double>(res.true_positives) / p;
    const int64_t q = res.true_positives + res.false_positives;
    res.precision = q == 0 ? 1.0 : static_cast<double>(res.true_positives) / q;

    int64_t diag = 0, total = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            total += res.confusion[i][j];
            if (i == j) diag += res.confusion[i][j];
        }
    res.status_accuracy = total == 0 ? 1.0 : static_cast<double>(diag) / total;

    for (const auto& [actor, counts] : actor_counts)
        res.per_actor_sensitivity[actor] =
            counts.second == 0 ? 1.0 : static_cast<double>(counts.first) / counts.second;
    return res;
}

inline EvalResult evaluateFiles(const std::string& truth_path, const std::string& traj_path,
                                const EvalConfig& cfg = {}) {
    return evaluate(loadTruth(truth_path), loadTrajectories(traj_path), cfg);
}

inline void writeMetrics(const std::string& path, const EvalResult& res) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path);
    out << res.toJson().dump(2) << '\n';
}

}  // namespace mmtrack
