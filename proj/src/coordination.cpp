#include "mrta/coordination.hpp"

#include <algorithm>
#include <numeric>

#include "mrta/errors.hpp"

namespace mrta {

NeighborSets neighbor_sets(const std::map<int, Vec2>& positions, double d_neighbor) {
    if (!(d_neighbor > 0.0)) throw InvalidInput("d_neighbor must be positive");
    NeighborSets out;
    for (const auto& [id, p] : positions) out[id];
    for (auto a = positions.begin(); a != positions.end(); ++a) {
        for (auto b = std::next(a); b != positions.end(); ++b) {
            if ((a->second - b->second).norm() < d_neighbor) {
                out[a->first].insert(b->first);
                out[b->first].insert(a->first);
            }
        }
    }
    return out;
}

namespace {

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

ClusterPartition form_clusters(const NeighborSets& neighbors) {
    std::vector<int> ids;
    for (const auto& [id, _] : neighbors) ids.push_back(id);
    auto slot = [&](int id) {
        auto it = std::lower_bound(ids.begin(), ids.end(), id);
        if (it == ids.end() || *it != id) throw InvalidInput("neighbor set references unknown robot " + std::to_string(id));
        return static_cast<std::size_t>(it - ids.begin());
    };

    DisjointSet ds(ids.size());
    for (const auto& [id, set] : neighbors) {
        for (int j : set) {
            auto it = neighbors.find(j);
            if (it == neighbors.end() || !it->second.contains(id))
                throw InvalidInput("asymmetric neighbor sets between robots " + std::to_string(id) + " and " +
                                   std::to_string(j));
            ds.unite(slot(id), slot(j));
        }
    }

    // ids are ascending, so each root is seen first at its smallest member.
    std::map<std::size_t, std::size_t> root_to_cluster;
    ClusterPartition out;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const std::size_t root = ds.find(k);
        auto [it, inserted] = root_to_cluster.emplace(root, out.clusters.size());
        if (inserted) out.clusters.emplace_back();
        out.clusters[it->second].members.push_back(ids[k]);
    }
    return out;
}

ClusterPartition elect_leaders(ClusterPartition partition, const std::set<int>& active_ids,
                               const PriorityOrder& higher_priority) {
    for (auto& c : partition.clusters) {
        c.active_members.clear();
        for (int id : c.members)
            if (active_ids.contains(id)) c.active_members.push_back(id);
        const auto& pool = c.active_members.empty() ? c.members : c.active_members;
        c.leader = pool.empty() ? -1 : *std::min_element(pool.begin(), pool.end(), higher_priority);
        c.all_stop = c.active_members.empty();
    }
    return partition;
}

}  // namespace mrta
