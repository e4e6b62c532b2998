#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <random>
#include <string>
#include <unordered_map>

#include "symfocus/error.hpp"
#include "symfocus/symclust.hpp"

namespace symfocus::cluster {
namespace {

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int nearest_center(const Feature& x, const std::vector<Feature>& centers) {
    int best = 0;
    double best_d = squared_distance(x, centers[0]);
    for (int k = 1; k < static_cast<int>(centers.size()); ++k) {
        const double d = squared_distance(x, centers[k]);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

std::vector<Feature> seed_centers(std::span<const Feature> points, int k, std::uint64_t seed) {
    const std::size_t n = points.size();
    std::mt19937_64 rng(seed);
    std::vector<bool> chosen(n, false);
    std::vector<Feature> centers;
    centers.reserve(static_cast<std::size_t>(k));

    std::size_t first = static_cast<std::size_t>(rng() % n);
    chosen[first] = true;
    centers.push_back(points[first]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], points[first]);

    // Greedy k-means++: several D^2-weighted candidates per step, keeping the
    // one that leaves the smallest total squared distance.
    const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!chosen[i]) total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double best_potential = std::numeric_limits<double>::infinity();
            for (int t = 0; t < trials; ++t) {
                const double target = unit_uniform(rng) * total;
                double cumulative = 0.0;
                std::size_t candidate = n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (chosen[i] || d2[i] <= 0.0) continue;
                    cumulative += d2[i];
                    candidate = i;
                    if (cumulative > target) break;
                }
                double potential = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    potential += std::min(d2[i], squared_distance(points[i], points[candidate]));
                }
                if (potential < best_potential) {
                    best_potential = potential;
                    pick = candidate;
                }
            }
        }
        if (pick == n) {
            // Every remaining point duplicates a center.
            pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) -
                                            chosen.begin());
        }
        chosen[pick] = true;
        centers.push_back(points[pick]);
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], points[pick]));
        }
    }
    return centers;
}

std::vector<Feature> cluster_means(std::span<const Feature> points, const std::vector<int>& assign,
                                   const std::vector<Feature>& previous) {
    const std::size_t k = previous.size();
    std::vector<Feature> sums(k, Feature{0.0, 0.0, 0.0});
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto c = static_cast<std::size_t>(assign[i]);
        for (int d = 0; d < 3; ++d) sums[c][d] += points[i][d];
        ++counts[c];
    }
    std::vector<Feature> out(k);
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) {
            out[c] = previous[c];
            continue;
        }
        for (int d = 0; d < 3; ++d) out[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
    return out;
}

// Moves the point farthest from its own center into each empty cluster.
void repair_empty_clusters(std::span<const Feature> points, std::vector<int>& assign,
                           std::vector<Feature>& centers) {
    const int k = static_cast<int>(centers.size());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int a : assign) ++counts[static_cast<std::size_t>(a)];
    for (int empty = 0; empty < k; ++empty) {
        if (counts[static_cast<std::size_t>(empty)] != 0) continue;
        std::size_t donor = points.size();
        double far = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto owner = static_cast<std::size_t>(assign[i]);
            if (counts[owner] < 2) continue;
            const double d = squared_distance(points[i], centers[owner]);
            if (d > far) {
                far = d;
                donor = i;
            }
        }
        if (donor == points.size()) break;  // cannot happen while n >= k
        --counts[static_cast<std::size_t>(assign[donor])];
        assign[donor] = empty;
        counts[static_cast<std::size_t>(empty)] = 1;
        centers[static_cast<std::size_t>(empty)] = points[donor];
    }
}

struct ClusterMembers {
    std::vector<std::vector<std::size_t>> ids;
    std::vector<FeatureSet> features;
    std::vector<std::size_t> position;  // index of each point inside its cluster
};

ClusterMembers group_members(std::span<const Feature> points, const std::vector<int>& assign,
                             int k) {
    ClusterMembers m;
    m.ids.resize(static_cast<std::size_t>(k));
    m.features.resize(static_cast<std::size_t>(k));
    m.position.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto c = static_cast<std::size_t>(assign[i]);
        m.position[i] = m.ids[c].size();
        m.ids[c].push_back(i);
        m.features[c].push_back(points[i]);
    }
    return m;
}

void check_inputs(std::span<const Feature> points, int k) {
    if (k < 1 || points.size() < static_cast<std::size_t>(k)) {
        throw Error(ErrorCode::TooFewPoints, std::to_string(points.size()) +
                                                 " points cannot form " + std::to_string(k) +
                                                 " clusters");
    }
}

std::size_t hash_assignment(const std::vector<int>& assign) {
    std::size_t h = assign.size();
    for (int a : assign) h ^= std::hash<int>{}(a) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

// One symmetry reassignment pass over every point against the current clusters.
std::vector<int> symmetry_step(std::span<const Feature> points, const std::vector<int>& assign,
                               std::vector<Feature>& centers, int k, double theta) {
    const auto members = group_members(points, assign, k);
    std::vector<SymmetryDistance> dps;
    dps.reserve(static_cast<std::size_t>(k));
    for (const auto& f : members.features) dps.emplace_back(f);

    std::vector<int> next(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        int best_k = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            const auto& dist = dps[static_cast<std::size_t>(c)];
            if (dist.size() == 0) continue;
            const std::optional<std::size_t> self =
                assign[i] == c ? std::optional<std::size_t>(members.position[i]) : std::nullopt;
            // Only distances below theta (and below the best so far) matter.
            const double d = dist.below(points[i], centers[static_cast<std::size_t>(c)], self,
                                        std::min(theta, best_d));
            if (d < best_d) {
                best_d = d;
                best_k = c;
            }
        }
        next[i] = best_d < theta ? best_k : nearest_center(points[i], centers);
    }
    repair_empty_clusters(points, next, centers);
    return next;
}

}  // namespace

const ClusterModel& SymIndexReport::best() const {
    for (const auto& e : entries) {
        if (e.k == k_star) return e.model;
    }
    throw Error(ErrorCode::EmptyInput, "report has no entry for k_star");
}

LloydResult lloyd_kmeans(std::span<const Feature> points, int k, const ClusteringConfig& cfg) {
    check_inputs(points, k);
    LloydResult r;
    r.centers = seed_centers(points, k, cfg.seed);
    r.assignments.assign(points.size(), -1);

    for (r.iterations = 0; r.iterations < cfg.max_iter; ++r.iterations) {
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const int c = nearest_center(points[i], r.centers);
            changed = changed || c != r.assignments[i];
            r.assignments[i] = c;
        }
        repair_empty_clusters(points, r.assignments, r.centers);
        const auto next = cluster_means(points, r.assignments, r.centers);
        double movement = 0.0;
        for (std::size_t c = 0; c < next.size(); ++c) {
            movement = std::max(movement, std::sqrt(squared_distance(next[c], r.centers[c])));
        }
        r.centers = next;
        if (!changed || movement < cfg.tol) break;
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        r.assignments[i] = nearest_center(points[i], r.centers);
    }
    repair_empty_clusters(points, r.assignments, r.centers);
    return r;
}

double epsilon_k(const ClusterModel& model, std::span<const Feature> points, EpsilonMode mode) {
    if (model.assignments.size() != points.size()) {
        throw Error(ErrorCode::InvalidSpec, "assignments do not cover the point set");
    }
    const auto members = group_members(points, model.assignments, model.k);
    double total = 0.0;
    for (int c = 0; c < model.k; ++c) {
        const auto& feats = members.features[static_cast<std::size_t>(c)];
        if (feats.empty()) continue;
        const SymmetryDistance dps(feats);
        double cluster_sum = 0.0;
        for (std::size_t j = 0; j < feats.size(); ++j) {
            cluster_sum += dps(feats[j], model.centers[static_cast<std::size_t>(c)], j);
        }
        total += mode == EpsilonMode::Mean ? cluster_sum / static_cast<double>(feats.size())
                                           : cluster_sum;
    }
    return total;
}

double max_center_separation(const ClusterModel& model) {
    if (model.k < 2 || model.centers.size() < 2) {
        throw Error(ErrorCode::SingleCluster, "center separation needs at least two clusters");
    }
    double best = 0.0;
    for (std::size_t i = 0; i < model.centers.size(); ++i) {
        for (std::size_t j = i + 1; j < model.centers.size(); ++j) {
            best = std::max(best, std::sqrt(squared_distance(model.centers[i], model.centers[j])));
        }
    }
    return best;
}

double sym_index(const ClusterModel& model) {
    if (model.epsilon_k < kEpsilonFloor) return kMaxSym;
    return model.d_k / (static_cast<double>(model.k) * model.epsilon_k);
}

ClusterModel sym_kmeans(std::span<const Feature> points, int k, const ClusteringConfig& cfg) {
    cfg.validate();
    if (k < 2) throw Error(ErrorCode::BadRange, "sym_kmeans needs K >= 2");
    check_inputs(points, k);

    LloydResult phase1 = lloyd_kmeans(points, k, cfg);
    std::vector<int> assign = std::move(phase1.assignments);
    std::vector<Feature> centers = cluster_means(points, assign, phase1.centers);

    // The next assignment is a function of the current one alone, so a
    // repeated assignment means a cycle; jump to the state max_iter would reach.
    std::vector<std::vector<int>> history{assign};
    std::unordered_multimap<std::size_t, std::size_t> seen{{hash_assignment(assign), 0}};
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        std::vector<int> next = symmetry_step(points, assign, centers, k, cfg.theta);
        if (next == assign) break;
        const std::size_t h = hash_assignment(next);
        std::optional<std::size_t> repeat;
        const auto [lo, hi] = seen.equal_range(h);
        for (auto it = lo; it != hi; ++it) {
            if (history[it->second] == next) repeat = it->second;
        }
        if (repeat) {
            const std::size_t period = history.size() - *repeat;
            const auto max_steps = static_cast<std::size_t>(cfg.max_iter);
            assign = history[*repeat + (max_steps - *repeat) % period];
            centers = cluster_means(points, assign, centers);
            break;
        }
        seen.emplace(h, history.size());
        history.push_back(next);
        assign = std::move(next);
        centers = cluster_means(points, assign, centers);
    }

    ClusterModel model;
    model.k = k;
    model.centers = std::move(centers);
    model.assignments = std::move(assign);
    model.epsilon_k = epsilon_k(model, points, cfg.epsilon_mode);
    model.d_k = max_center_separation(model);
    model.sym_index = sym_index(model);
    model.perfectly_symmetric = model.epsilon_k < kEpsilonFloor;
    return model;
}

SymIndexReport select_k(std::span<const Feature> points, int k_min, int k_max,
                        const ClusteringConfig& cfg) {
    if (k_min < 2 || k_min > k_max) {
        throw Error(ErrorCode::BadRange, "invalid K range [" + std::to_string(k_min) + ", " +
                                             std::to_string(k_max) + "]");
    }
    cfg.validate();
    check_inputs(points, k_max);

    std::vector<std::future<ClusterModel>> runs;
    for (int k = k_min; k <= k_max; ++k) {
        runs.push_back(std::async(std::launch::async,
                                  [points, k, &cfg] { return sym_kmeans(points, k, cfg); }));
    }
    SymIndexReport report;
    for (int k = k_min; k <= k_max; ++k) {
        ClusterModel m = runs[static_cast<std::size_t>(k - k_min)].get();
        const double s = m.sym_index;
        report.entries.push_back(SymIndexEntry{k, s, std::move(m)});
    }
    report.k_star = report.entries.front().k;
    double best = report.entries.front().sym_index;
    for (const auto& e : report.entries) {
        if (e.sym_index > best) {
            best = e.sym_index;
            report.k_star = e.k;
        }
    }
    return report;
}

}  // namespace symfocus::cluster
