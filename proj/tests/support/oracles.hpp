#pragma once

// Brute-force oracles shared by unit and acceptance tests. They re-derive
// results from first principles rather than calling the code under test.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

/// Top-k partners per word by exhaustive PMI over document sets. Each doc
/// is a set of (already filtered) words. Ties within 1e-12 go to the
/// lexicographically smaller partner.
inline std::map<std::string, std::set<std::string>> pmi_top_k(const std::vector<std::set<std::string>>& docs,
                                                              std::size_t k) {
  std::set<std::string> words;
  for (const auto& d : docs) words.insert(d.begin(), d.end());
  const double n = static_cast<double>(docs.size());
  auto df = [&](const std::string& w) {
    double c = 0;
    for (const auto& d : docs) c += d.count(w) ? 1 : 0;
    return c;
  };
  auto joint = [&](const std::string& a, const std::string& b) {
    double c = 0;
    for (const auto& d : docs) c += (d.count(a) && d.count(b)) ? 1 : 0;
    return c;
  };
  std::map<std::string, std::set<std::string>> out;
  for (const auto& w : words) {
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& u : words) {
      if (u == w) continue;
      const double j = joint(w, u);
      if (j == 0) continue;
      scored.emplace_back(std::log((j / n) / ((df(w) / n) * (df(u) / n))), u);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (std::abs(a.first - b.first) > 1e-12) return a.first > b.first;
      return a.second < b.second;
    });
    auto& dst = out[w];
    for (std::size_t i = 0; i < scored.size() && i < k; ++i) dst.insert(scored[i].second);
  }
  return out;
}

/// Exhaustive depth-first enumeration of simple paths of <= max_hops edges
/// over an undirected adjacency list (neighbors in stored order, each node
/// exploring at most `cap` unvisited neighbors). A path ends at the first
/// latter concept it reaches. Returns the minimal length per (start, end).
inline std::set<std::tuple<std::string, std::string, std::size_t>> shortest_paths(
    const std::map<std::string, std::vector<std::string>>& adj, const std::vector<std::string>& former,
    const std::set<std::string>& latter, std::size_t max_hops, std::size_t cap) {
  std::map<std::pair<std::string, std::string>, std::size_t> best;
  std::vector<std::string> path;
  auto dfs = [&](auto&& self, const std::string& node) -> void {
    if (path.size() - 1 >= max_hops) return;
    auto it = adj.find(node);
    if (it == adj.end()) return;
    std::size_t taken = 0;
    for (const auto& nb : it->second) {
      if (taken >= cap) break;
      if (std::find(path.begin(), path.end(), nb) != path.end()) continue;
      ++taken;
      path.push_back(nb);
      if (latter.count(nb)) {
        auto key = std::make_pair(path.front(), nb);
        auto bit = best.find(key);
        if (bit == best.end() || bit->second > path.size() - 1) best[key] = path.size() - 1;
      } else {
        self(self, nb);
      }
      path.pop_back();
    }
  };
  for (const auto& s : former) {
    if (!adj.count(s)) continue;
    path = {s};
    dfs(dfs, s);
  }
  std::set<std::tuple<std::string, std::string, std::size_t>> out;
  for (const auto& [k, v] : best) out.emplace(k.first, k.second, v);
  return out;
}

}  // namespace oracle
