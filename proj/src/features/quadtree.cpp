#include <algorithm>
#include <cmath>
#include <numeric>

#include "stereotrack/features/extraction.hpp"

namespace stereotrack {
namespace {

struct Node {
  float x0, x1, y0, y1;
  std::vector<std::uint32_t> members;

  bool splittable() const { return members.size() > 1 && (x1 - x0) >= 1.0F && (y1 - y0) >= 1.0F; }
};

// Non-empty children in TL, TR, BL, BR order.
void split(const Node& node, std::span<const KeyPoint> kps, std::vector<Node>& out) {
  const float mx = 0.5F * (node.x0 + node.x1);
  const float my = 0.5F * (node.y0 + node.y1);
  Node children[4] = {{node.x0, mx, node.y0, my, {}},
                      {mx, node.x1, node.y0, my, {}},
                      {node.x0, mx, my, node.y1, {}},
                      {mx, node.x1, my, node.y1, {}}};
  for (std::uint32_t idx : node.members) {
    const KeyPoint& kp = kps[idx];
    const int c = (kp.u < mx ? 0 : 1) + (kp.v < my ? 0 : 2);
    children[c].members.push_back(idx);
  }
  for (Node& c : children) {
    if (!c.members.empty()) {
      out.push_back(std::move(c));
    }
  }
}

}  // namespace

QuadtreeResult distribute_quadtree(std::span<const KeyPoint> kps, int target, int width, int height) {
  QuadtreeResult result;
  if (kps.empty()) {
    return result;
  }
  const int n_ini = std::max(1, static_cast<int>(std::lround(static_cast<double>(width) / height)));
  const float hx = static_cast<float>(width) / n_ini;
  std::vector<Node> nodes;
  for (int i = 0; i < n_ini; ++i) {
    nodes.push_back(Node{hx * i, hx * (i + 1), 0.0F, static_cast<float>(height), {}});
  }
  for (std::uint32_t i = 0; i < kps.size(); ++i) {
    const int c = std::clamp(static_cast<int>(std::floor(kps[i].u / hx)), 0, n_ini - 1);
    nodes[c].members.push_back(i);
  }
  std::erase_if(nodes, [](const Node& n) { return n.members.empty(); });

  const auto target_nodes = static_cast<std::size_t>(std::max(1, target));
  std::vector<Node> next;
  while (nodes.size() < target_nodes) {
    std::size_t splittable = 0;
    for (const Node& n : nodes) {
      splittable += n.splittable() ? 1 : 0;
    }
    if (splittable == 0) {
      break;
    }
    if (nodes.size() + 3 * splittable <= target_nodes) {
      next.clear();
      for (const Node& n : nodes) {
        if (n.splittable()) {
          split(n, kps, next);
        } else {
          next.push_back(n);
        }
      }
      nodes.swap(next);
      continue;
    }
    // Final round: split the most populated nodes first until the target
    // is reached. Ties keep node order.
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].splittable()) {
        order.push_back(i);
      }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return nodes[a].members.size() > nodes[b].members.size(); });
    std::vector<bool> replaced(nodes.size(), false);
    std::vector<Node> added;
    std::size_t count = nodes.size();
    for (std::size_t idx : order) {
      if (count >= target_nodes) {
        break;
      }
      const std::size_t before = added.size();
      split(nodes[idx], kps, added);
      replaced[idx] = true;
      count += (added.size() - before) - 1;
    }
    next.clear();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!replaced[i]) {
        next.push_back(std::move(nodes[i]));
      }
    }
    for (Node& n : added) {
      next.push_back(std::move(n));
    }
    nodes.swap(next);
    break;
  }

  result.leaves.reserve(nodes.size());
  for (Node& n : nodes) {
    QuadtreeLeaf leaf{n.x0, n.x1, n.y0, n.y1, std::move(n.members), 0};
    std::sort(leaf.members.begin(), leaf.members.end());
    std::uint32_t best = leaf.members.front();
    for (std::uint32_t idx : leaf.members) {
      if (kps[idx].response > kps[best].response) {
        best = idx;
      }
    }
    leaf.survivor = best;
    result.kept.push_back(best);
    result.leaves.push_back(std::move(leaf));
  }
  std::sort(result.kept.begin(), result.kept.end());
  return result;
}

std::vector<KeyPoint> filter_keypoints(std::span<const KeyPoint> kps, int target, int width, int height) {
  if (kps.size() <= static_cast<std::size_t>(std::max(0, target))) {
    return {kps.begin(), kps.end()};
  }
  const QuadtreeResult q = distribute_quadtree(kps, target, width, height);
  std::vector<KeyPoint> out;
  out.reserve(q.kept.size());
  for (std::uint32_t idx : q.kept) {
    out.push_back(kps[idx]);
  }
  return out;
}

}  // namespace stereotrack
