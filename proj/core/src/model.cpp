#include "copf/model.hpp"

#include <algorithm>
#include <queue>

namespace copf {

int Network::bus_index(int id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<int>(i);
  return -1;
}

int Network::slack_index() const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].slack) return static_cast<int>(i);
  return -1;
}

std::vector<int> Network::generators_at(int bus_idx) const {
  std::vector<int> out;
  if (bus_idx < 0 || bus_idx >= static_cast<int>(buses.size())) return out;
  const int id = buses[bus_idx].id;
  for (size_t g = 0; g < generators.size(); ++g)
    if (generators[g].bus == id) out.push_back(static_cast<int>(g));
  return out;
}

std::vector<int> Network::loads_at(int bus_idx) const {
  std::vector<int> out;
  if (bus_idx < 0 || bus_idx >= static_cast<int>(buses.size())) return out;
  const int id = buses[bus_idx].id;
  for (size_t l = 0; l < loads.size(); ++l)
    if (loads[l].bus == id) out.push_back(static_cast<int>(l));
  return out;
}

int Network::storage_at(int bus_idx) const {
  if (bus_idx < 0 || bus_idx >= static_cast<int>(buses.size())) return -1;
  const int id = buses[bus_idx].id;
  for (size_t s = 0; s < storage.size(); ++s)
    if (storage[s].bus == id) return static_cast<int>(s);
  return -1;
}

double Network::max_emission_factor() const {
  double w = 0.0;
  for (const auto& g : generators) w = std::max(w, g.emission_factor);
  return w;
}

bool Network::connected() const {
  const size_t n = buses.size();
  if (n == 0) return false;
  std::vector<std::vector<int>> adj(n);
  for (const auto& br : branches) {
    const int a = bus_index(br.from), b = bus_index(br.to);
    if (a < 0 || b < 0) continue;  // dangling endpoints reported elsewhere
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  size_t count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        q.push(v);
      }
  }
  return count == n;
}

std::vector<double> broadcast(double value, int periods) {
  return std::vector<double>(static_cast<size_t>(periods), value);
}

}  // namespace copf
