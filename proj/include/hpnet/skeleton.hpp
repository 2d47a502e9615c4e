// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hpnet/errors.hpp"
#include "hpnet/tensor.hpp"

namespace hpnet {

// Undirected joint tree. Edges are stored as (parent, child); the adjacency
// matrix is symmetric with self-loops added on the diagonal.
struct SkeletonGraph {
    std::size_t n = 0;
    std::vector<std::pair<int, int>> edges;
    std::vector<int> parent; // root's parent is itself

    static SkeletonGraph from_edges(std::size_t n_joints,
                                    std::vector<std::pair<int, int>> edge_list) {
        SkeletonGraph g;
        g.n = n_joints;
        g.edges = std::move(edge_list);
        g.parent.assign(n_joints, -1);
        std::size_t reached = 0;
        for (auto [p, c] : g.edges) {
            if (p < 0 || c < 0 || static_cast<std::size_t>(p) >= n_joints ||
                static_cast<std::size_t>(c) >= n_joints)
                throw validation_error("skeleton: edge index out of range");
            if (g.parent[c] != -1) throw validation_error("skeleton: joint has two parents");
            g.parent[c] = p;
            ++reached;
        }
        if (reached + 1 != n_joints)
            throw validation_error("skeleton: edge list must form a tree (n-1 edges)");
        int root = -1;
        for (std::size_t j = 0; j < n_joints; ++j) {
            if (g.parent[j] == -1) {
                if (root != -1) throw validation_error("skeleton: multiple roots");
                root = static_cast<int>(j);
            }
        }
        if (root == -1) throw validation_error("skeleton: cycle detected");
        g.parent[root] = root;
        // connectivity: every joint must reach the root through parents
        for (std::size_t j = 0; j < n_joints; ++j) {
            int cur = static_cast<int>(j);
            for (std::size_t hop = 0; hop <= n_joints; ++hop) {
                if (cur == root) break;
                cur = g.parent[cur];
                if (hop == n_joints) throw validation_error("skeleton: disconnected joint");
            }
        }
        return g;
    }

    // COCO keypoint order: nose, eyes, ears, shoulders, elbows, wrists,
    // hips, knees, ankles; rooted at the nose.
    static SkeletonGraph coco17() {
        return from_edges(17, {{0, 1},
                               {0, 2},
                               {1, 3},
                               {2, 4},
                               {0, 5},
                               {0, 6},
                               {5, 7},
                               {7, 9},
                               {6, 8},
                               {8, 10},
                               {5, 11},
                               {6, 12},
                               {11, 13},
                               {13, 15},
                               {12, 14},
                               {14, 16}});
    }

    static SkeletonGraph chain(std::size_t n_joints) {
        std::vector<std::pair<int, int>> edge_list;
        for (std::size_t j = 1; j < n_joints; ++j)
            edge_list.emplace_back(static_cast<int>(j - 1), static_cast<int>(j));
        return from_edges(n_joints, std::move(edge_list));
    }

    // COCO-17 for the default joint count, a chain otherwise
    static SkeletonGraph default_for(std::size_t n_joints) {
        return n_joints == 17 ? coco17() : chain(n_joints);
    }

    // file format: JSON list of [parent, child] pairs
    static SkeletonGraph from_json(const nlohmann::json& j) {
        if (!j.is_array() || j.empty())
            throw validation_error("skeleton json: expected non-empty list of [parent, child]");
        std::vector<std::pair<int, int>> edge_list;
        int max_joint = 0;
        for (const auto& e : j) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
                !e[1].is_number_integer())
                throw validation_error("skeleton json: each entry must be [parent, child]");
            edge_list.emplace_back(e[0].get<int>(), e[1].get<int>());
            max_joint = std::max({max_joint, e[0].get<int>(), e[1].get<int>()});
        }
        return from_edges(static_cast<std::size_t>(max_joint) + 1, std::move(edge_list));
    }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::array();
        for (auto [p, c] : edges) j.push_back({p, c});
        return j;
    }
};

// symmetric 0/1 adjacency with self-loops on the diagonal
template <class S>
TensorT<S> adjacency_with_self_loops(const SkeletonGraph& g) {
    TensorT<S> a({g.n, g.n});
    for (std::size_t i = 0; i < g.n; ++i) a.at(i, i) = S(1);
    for (auto [p, c] : g.edges) {
        a.at(static_cast<std::size_t>(p), static_cast<std::size_t>(c)) = S(1);
        a.at(static_cast<std::size_t>(c), static_cast<std::size_t>(p)) = S(1);
    }
    return a;
}

} // namespace hpnet
