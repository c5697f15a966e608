#include "ubmbandit/replay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ubmbandit/csv.hpp"
#include "ubmbandit/reward.hpp"

namespace ubmbandit {

CandidateSet ReplayGroup::candidate_set() const {
  CandidateSet out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.push_back(Candidate{candidates[i], contexts.empty() ? Context() : contexts[i]});
  }
  return out;
}

ReplayDataset ReplayDataset::build(std::span<const SessionRecord> records, GroupBy group_by) {
  if (records.empty()) throw std::invalid_argument("ReplayDataset: no records");
  std::map<std::string, ReplayGroup> by_key;
  ReplayDataset ds;
  for (const auto& rec : records) {
    validate_session(rec);
    if (rec.displayed.empty()) throw std::invalid_argument("ReplayDataset: empty record");
    std::vector<ArmId> ids = rec.displayed;
    std::sort(ids.begin(), ids.end());
    std::string key = group_by == GroupBy::kUserAndCandidates ? rec.user + "|" : std::string();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) key += ';';
      key += std::to_string(ids[i]);
    }
    auto& g = by_key[key];
    if (g.records.empty()) {
      g.key = key;
      g.candidates = ids;
    }
    g.records.push_back(rec);
    ds.max_list_length_ = std::max(ds.max_list_length_, static_cast<int>(rec.displayed.size()));
  }
  for (auto& [key, g] : by_key) {
    // Contexts come from the first record of the group that carries them.
    for (const auto& rec : g.records) {
      if (rec.contexts.empty()) continue;
      g.contexts.resize(g.candidates.size());
      for (std::size_t i = 0; i < rec.displayed.size(); ++i) {
        const auto pos = std::lower_bound(g.candidates.begin(), g.candidates.end(),
                                          rec.displayed[i]) - g.candidates.begin();
        g.contexts[static_cast<std::size_t>(pos)] = rec.contexts[i];
      }
      break;
    }
    ds.groups_.push_back(std::move(g));
  }
  return ds;
}

void ReplayDataset::set_contexts(std::size_t group, std::vector<Context> contexts) {
  auto& g = groups_.at(group);
  if (contexts.size() != g.candidates.size()) {
    throw std::invalid_argument("set_contexts: one context per candidate required");
  }
  g.contexts = std::move(contexts);
}

const std::vector<double>& PropensityTable::slots(std::size_t group, ArmId arm) const {
  const auto& m = table_.at(group);
  const auto it = m.find(arm);
  return it == m.end() ? zeros_ : it->second;
}

double PropensityTable::examination(std::size_t group, ArmId arm) const {
  const auto& m = examination_.at(group);
  const auto it = m.find(arm);
  return it == m.end() ? 0.0 : it->second;
}

PropensityTable build_propensities(const ReplayDataset& dataset, const PositionWeights& weights) {
  if (dataset.size() == 0) throw std::invalid_argument("build_propensities: empty dataset");
  if (dataset.max_list_length() > weights.list_length()) {
    throw std::invalid_argument("build_propensities: logged lists of length " +
                                std::to_string(dataset.max_list_length()) +
                                " exceed the weight table (K=" +
                                std::to_string(weights.list_length()) + ")");
  }
  PropensityTable t;
  t.zeros_.assign(weights.slot_count(), 0.0);
  t.table_.resize(dataset.size());
  t.examination_.resize(dataset.size());
  for (std::size_t g = 0; g < dataset.size(); ++g) {
    const auto& group = dataset.group(g);
    const double share = 1.0 / static_cast<double>(group.records.size());
    auto& m = t.table_[g];
    for (const auto& rec : group.records) {
      const auto kp = last_click_positions(rec.clicks);
      for (std::size_t i = 0; i < rec.displayed.size(); ++i) {
        auto& v = m[rec.displayed[i]];
        if (v.empty()) v.assign(weights.slot_count(), 0.0);
        v[PositionWeights::slot_index(static_cast<int>(i) + 1, kp[i])] += share;
      }
    }
    for (const auto& [arm, v] : m) {
      double dot = 0.0;
      for (std::size_t s = 0; s < v.size(); ++s) dot += v[s] * weights.tilde()[s];
      t.examination_[g][arm] = dot;
    }
  }
  return t;
}

double simulate_item_reward(ArmId arm, int k, int k_prime, const ReplayDataset& dataset,
                            std::size_t group, const PositionWeights& weights,
                            const PropensityTable& propensities) {
  const auto& g = dataset.group(group);
  const double logged = propensities.examination(group, arm);
  if (!(logged > 0.0)) {
    throw EvaluationError("zero propensity for arm " + std::to_string(arm) + " in group '" +
                          g.key + "'");
  }
  const double target = weights.at(k, k_prime);
  double sum = 0.0;
  for (const auto& rec : g.records) {
    for (std::size_t i = 0; i < rec.displayed.size(); ++i) {
      if (rec.displayed[i] == arm) sum += rec.clicks[i] * (target / logged);
    }
  }
  return sum / static_cast<double>(g.records.size());
}

int sample_last_click(double reward, CounterRng& rng) {
  if (reward < 0.0) throw std::invalid_argument("sample_last_click: negative reward");
  if (reward >= 1.0) return 1;
  return rng.bernoulli(reward) ? 1 : 0;
}

CtrMetrics compute_ctr(std::span<const ClickVector> rounds) {
  CtrMetrics m;
  if (rounds.empty()) return m;
  for (const auto& c : rounds) {
    for (int v : c) m.ctr_sum += v;
    m.ctr_set += set_reward(c);
  }
  const double n = static_cast<double>(rounds.size());
  m.ctr_sum /= n;
  m.ctr_set /= n;
  return m;
}

ReplayResult replay_evaluate(Policy& policy, const ReplayDataset& dataset,
                             const PositionWeights& weights, int list_length,
                             const ReplayOptions& options) {
  if (list_length < 1 || list_length > weights.list_length()) {
    throw std::invalid_argument("replay_evaluate: K must lie in [1, weights K]");
  }
  for (const auto& g : dataset.groups()) {
    if (static_cast<int>(g.candidates.size()) < list_length) {
      throw std::invalid_argument("replay_evaluate: group '" + g.key + "' has fewer than K=" +
                                  std::to_string(list_length) + " candidates");
    }
  }
  const auto propensities = build_propensities(dataset, weights);

  // Per (group, arm): (clicks / |D_X|) / <W~, pi>, so the reward at slot
  // (k,k') is w(k,k') times this rate. NaN marks a zero denominator.
  std::vector<std::map<ArmId, double>> rate(dataset.size());
  std::vector<CandidateSet> candidates(dataset.size());
  for (std::size_t g = 0; g < dataset.size(); ++g) {
    const auto& group = dataset.group(g);
    std::map<ArmId, double> clicks;
    for (const auto& rec : group.records) {
      for (std::size_t i = 0; i < rec.displayed.size(); ++i) clicks[rec.displayed[i]] += rec.clicks[i];
    }
    const double n = static_cast<double>(group.records.size());
    for (const auto& [arm, c] : clicks) {
      const double exam = propensities.examination(g, arm);
      rate[g][arm] = exam > 0.0 ? (c / n) / exam : std::numeric_limits<double>::quiet_NaN();
    }
    candidates[g] = group.candidate_set();
  }

  CounterRng rng(options.seed);
  ReplayResult result;
  double sum_rewards = 0.0;
  double sum_sets = 0.0;
  for (std::uint64_t t = 1; t <= options.rounds; ++t) {
    const auto g = static_cast<std::size_t>(rng.uniform_index(dataset.size()));
    const auto selection = policy.select(candidates[g], static_cast<std::size_t>(list_length));

    ReplayRound round;
    round.round = t;
    ClickVector clicks(selection.size(), 0);
    bool miss = false;
    int last = 0;
    for (std::size_t i = 0; i < selection.size(); ++i) {
      const int k = static_cast<int>(i) + 1;
      const auto it = rate[g].find(selection.arms[i]);
      if (it == rate[g].end() || std::isnan(it->second)) {
        miss = true;
        break;
      }
      const double r = weights.at(k, last) * it->second;
      round.k_prime.push_back(last);
      round.rewards.push_back(r);
      clicks[i] = sample_last_click(r, rng);
      if (clicks[i]) last = k;
    }
    if (miss) {
      ++result.skipped;
      continue;
    }
    policy.feedback(selection, clicks);

    ++result.rounds;
    for (double r : round.rewards) sum_rewards += r;
    round.set_reward = set_reward(clicks);
    sum_sets += round.set_reward;
    const double n = static_cast<double>(result.rounds);
    round.cum_ctr_sum = sum_rewards / n;
    round.cum_ctr_set = sum_sets / n;
    if (options.on_round) options.on_round(result.rounds, round.cum_ctr_sum, round.cum_ctr_set);
    if (options.keep_trace) {
      round.group_key = dataset.group(g).key;
      round.selected = selection.arms;
      result.trace.push_back(std::move(round));
    }
  }
  if (result.rounds > 0) {
    result.ctr_sum = sum_rewards / static_cast<double>(result.rounds);
    result.ctr_set = sum_sets / static_cast<double>(result.rounds);
  }
  return result;
}

void write_trace_csv(std::ostream& out, const ReplayResult& result) {
  out << "round,group_key,selected_ids,kprime_vector,item_rewards,F,cum_ctr_sum,cum_ctr_set\n";
  for (const auto& r : result.trace) {
    std::vector<long long> ids(r.selected.begin(), r.selected.end());
    out << r.round << ',' << r.group_key << ',' << join(std::span<const long long>(ids)) << ','
        << join(std::span<const int>(r.k_prime)) << ',' << join(std::span<const double>(r.rewards))
        << ',' << r.set_reward << ',' << format_double(r.cum_ctr_sum) << ','
        << format_double(r.cum_ctr_set) << '\n';
  }
}

}  // namespace ubmbandit
