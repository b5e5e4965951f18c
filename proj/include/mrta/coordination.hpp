#pragma once

#include <functional>
#include <map>
#include <set>
#include <vector>

#include "mrta/geometry.hpp"

namespace mrta {

struct Cluster {
    std::vector<int> members;  // ascending
    int leader = -1;
    std::vector<int> active_members;
    bool all_stop = false;  // no active member: every robot gets the stop law
};

struct ClusterPartition {
    std::vector<Cluster> clusters;  // ordered by smallest member id
};

using NeighborSets = std::map<int, std::set<int>>;

// B_i = { j != i : |p_j - p_i| < d_neighbor }.
NeighborSets neighbor_sets(const std::map<int, Vec2>& positions, double d_neighbor);

// Connected components of the neighbor graph (union-find). Throws
// InvalidInput when the sets are not symmetric.
ClusterPartition form_clusters(const NeighborSets& neighbors);

// Returns true when a should lead over b.
using PriorityOrder = std::function<bool(int a, int b)>;

inline bool ascending_id_priority(int a, int b) { return a < b; }

ClusterPartition elect_leaders(ClusterPartition partition, const std::set<int>& active_ids,
                               const PriorityOrder& higher_priority = ascending_id_priority);

}  // namespace mrta
