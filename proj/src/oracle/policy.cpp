#include "dials/oracle/policy.hpp"

#include <algorithm>

#include "dials/core/rng.hpp"

namespace dials::oracle {

size_t HistoryKeyHash::operator()(const HistoryKey& k) const {
  uint64_t h = mix64(k.size());
  for (int32_t v : k) h = mix64(h ^ static_cast<uint32_t>(v));
  return static_cast<size_t>(h);
}

HistoryKey key_of(const ObservationHistory& h) {
  HistoryKey k;
  for (int t = 0; t <= h.length(); ++t) {
    if (t > 0) k.push_back(h.action(t - 1));
    k.push_back(h.observation(t));
  }
  return k;
}

HistoryKey key_of(const LocalHistory& l) {
  require(!l.empty() && l.state_width() == 1, "key_of: expected a width-1 local history");
  HistoryKey k;
  for (int t = 0; t < l.num_states(); ++t) {
    if (t > 0) k.push_back(l.action(t - 1));
    k.push_back(l.state(t)[0]);
  }
  return k;
}

LocalHistory local_history_of(const HistoryKey& key) {
  require(key.size() % 2 == 1, "local_history_of: malformed key");
  LocalHistory l(LocalState{{key[0]}});
  for (size_t k = 1; k < key.size(); k += 2) l.append(key[k], LocalState{{key[k + 1]}});
  return l;
}

std::vector<double> TabularPolicy::probs(std::span<const int32_t> aoh) const {
  std::vector<double> out(static_cast<size_t>(num_actions()));
  probs(aoh, out);
  return out;
}

void UniformPolicy::probs(std::span<const int32_t>, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 1.0 / n_);
}

void RandomPolicy::probs(std::span<const int32_t> aoh, std::span<double> out) const {
  uint64_t h = mix64(seed_ ^ 0x5bd1e995u);
  for (int32_t v : aoh) h = mix64(h ^ static_cast<uint32_t>(v));
  h = mix64(h ^ aoh.size());
  Rng rng(h);
  double sum = 0.0;
  for (int a = 0; a < n_; ++a) sum += out[a] = rng.exponential();
  if (deterministic_) {
    const int best = static_cast<int>(std::max_element(out.begin(), out.begin() + n_) - out.begin());
    std::fill(out.begin(), out.begin() + n_, 0.0);
    out[best] = 1.0;
    return;
  }
  for (int a = 0; a < n_; ++a) out[a] /= sum;
}

void TablePolicy::set(const HistoryKey& h, std::vector<double> p) {
  require(static_cast<int>(p.size()) == n_, "TablePolicy: row size");
  table_[h] = std::move(p);
}

void TablePolicy::probs(std::span<const int32_t> aoh, std::span<double> out) const {
  const auto it = table_.find(HistoryKey(aoh.begin(), aoh.end()));
  if (it == table_.end()) {
    std::fill(out.begin(), out.end(), 1.0 / n_);
    return;
  }
  std::copy(it->second.begin(), it->second.end(), out.begin());
}

}  // namespace dials::oracle
