#include "hashrate/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>

#include "hashrate/errors.hpp"

namespace hashrate {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Digest256 random_digest(std::mt19937_64& rng) {
  Digest256 d;
  for (std::size_t i = 0; i < 4; ++i) {
    std::uint64_t word = rng();
    for (std::size_t b = 0; b < 8; ++b) {
      d.bytes[i * 8 + b] = static_cast<std::uint8_t>(word & 0xff);
      word >>= 8;
    }
  }
  return d;
}

// A hashing participant with a rate that may step down at the fork time.
struct Entity {
  std::string label;
  double rate_before = 0.0;
  double rate_after = 0.0;
  double reports_per_block = 0.0;

  double rate_at(double time, double fork) const { return time < fork ? rate_before : rate_after; }

  double hashes_between(double a, double b, double fork) const {
    if (b <= fork) return rate_before * (b - a);
    if (a >= fork) return rate_after * (b - a);
    return rate_before * (fork - a) + rate_after * (b - fork);
  }
};

Digest256 block_id(const Digest256& parent, const HashValue& pow, std::int64_t ts, const std::string& miner,
                   std::size_t seq) {
  std::string buf = parent.to_hex();
  buf += pow.to_hex();
  buf += std::to_string(ts);
  buf += '|';
  buf += miner;
  buf += '|';
  buf += std::to_string(seq);
  return sha256(buf);
}

class Simulation {
public:
  explicit Simulation(const SimConfig& config) : cfg_(config), rng_(config.seed) {
    for (const auto& m : cfg_.miners) entities_.push_back({m.label, m.hash_rate, m.hash_rate, m.reports_per_block});
    fork_ = cfg_.duration_seconds + 1.0;
    if (cfg_.attacker) {
      const auto& a = *cfg_.attacker;
      entities_.push_back({a.label, a.total_rate, a.total_rate * (1.0 - a.divert_fraction), a.reports_per_block});
      if (a.divert_fraction > 0.0) fork_ = a.fork_time;
    }
    floor_ = cfg_.target.unit();
  }

  SyntheticTrace run() {
    SyntheticTrace trace;
    trace.config = cfg_;

    BlockHeader genesis;
    genesis.parent_id = Digest256{};
    genesis.id = sha256("genesis|" + std::to_string(cfg_.seed));
    genesis.timestamp = 0;
    genesis.pow_hash = HashValue();
    genesis.target = cfg_.target;
    genesis.miner = "genesis";
    trace.headers.push_back(genesis);

    std::size_t tip = 0;
    double tip_arrival = 0.0;
    double now = 0.0;

    for (;;) {
      const double network = network_rate(now);
      if (!(network > 0.0)) {
        if (now < fork_) {
          now = fork_;
          continue;
        }
        break;
      }
      const double lambda = network * floor_;
      const double arrival = now - std::log1p(-uniform01(rng_)) / lambda;
      if (now < fork_ && arrival > fork_) {
        // Rate changes at the fork; the exponential clock is memoryless.
        now = fork_;
        continue;
      }
      if (arrival > cfg_.duration_seconds) break;

      const std::size_t finder = pick_proposer(arrival);
      const auto& parent_of_tip = trace.headers[tip];
      const bool ommer = tip != 0 && arrival - tip_arrival < cfg_.propagation_window_seconds;

      BlockHeader h;
      h.target = cfg_.target;
      h.pow_hash = HashValue::from_unit(uniform01(rng_) * floor_);
      if (h.pow_hash > cfg_.target.value()) h.pow_hash = cfg_.target.value();
      h.miner = entities_[finder].label;
      h.is_ommer = ommer;

      if (ommer) {
        const auto parent_index = index_of(parent_of_tip.parent_id);
        const auto& parent = trace.headers[parent_index];
        h.parent_id = parent.id;
        h.timestamp = std::max(static_cast<std::int64_t>(std::floor(arrival)), parent.timestamp + 1);
        h.id = block_id(h.parent_id, h.pow_hash, h.timestamp, h.miner, trace.headers.size());
        trace.headers.push_back(h);
      } else {
        emit_interval_reports(trace, parent_of_tip.id, tip_arrival, arrival, finder, true);
        h.parent_id = parent_of_tip.id;
        h.timestamp = std::max(static_cast<std::int64_t>(std::floor(arrival)), parent_of_tip.timestamp + 1);
        h.id = block_id(h.parent_id, h.pow_hash, h.timestamp, h.miner, trace.headers.size());
        trace.headers.push_back(h);
        positions_.emplace(h.id, trace.headers.size() - 1);
        tip = trace.headers.size() - 1;
        tip_arrival = arrival;
      }
      now = arrival;
    }
    emit_interval_reports(trace, trace.headers[tip].id, tip_arrival, cfg_.duration_seconds, entities_.size(), false);

    if (trace.headers.size() == 1) throw InvalidArgument("empty trace: no blocks within the simulated duration");

    trace.ground_truth = ground_truth();
    return trace;
  }

private:
  double network_rate(double time) const {
    double sum = 0.0;
    for (const auto& e : entities_) sum += e.rate_at(time, fork_);
    return sum;
  }

  std::size_t pick_proposer(double time) {
    const double total = network_rate(time);
    double u = uniform01(rng_) * total;
    for (std::size_t i = 0; i < entities_.size(); ++i) {
      const double r = entities_[i].rate_at(time, fork_);
      if (u < r) return i;
      u -= r;
    }
    // Rounding left u at the very top; take the last miner with power.
    for (std::size_t i = entities_.size(); i-- > 0;) {
      if (entities_[i].rate_at(time, fork_) > 0.0) return i;
    }
    return 0;
  }

  // Main-chain position; genesis is the only block not in the map.
  std::size_t index_of(const Digest256& id) const {
    auto it = positions_.find(id);
    return it == positions_.end() ? 0 : it->second;
  }

  // Reports covering mining on top of `prior` during [from, to). The partial
  // interval before a block arrival is reported by everyone except the finder.
  void emit_interval_reports(SyntheticTrace& trace, const Digest256& prior, double from, double to,
                             std::size_t finder, bool include_partial) {
    for (std::size_t i = 0; i < entities_.size(); ++i) {
      const auto& e = entities_[i];
      if (!(e.reports_per_block > 0.0)) continue;
      const double sigma =
          cfg_.report_sigma > 0.0 ? cfg_.report_sigma : cfg_.block_interval_seconds / e.reports_per_block;
      ReportChainState state(prior);
      std::uint64_t k = 0;
      for (;; ++k) {
        const double start = from + static_cast<double>(k) * sigma;
        const double end = from + static_cast<double>(k + 1) * sigma;
        if (end > to) break;
        emit_one(trace, e, start, end, state);
      }
      const double start = from + static_cast<double>(k) * sigma;
      if (include_partial && i != finder && to > start) emit_one(trace, e, start, to, state);
    }
  }

  void emit_one(SyntheticTrace& trace, const Entity& e, double start, double end, ReportChainState& state) {
    const double hashes = e.hashes_between(start, end, fork_);
    if (std::round(hashes) < 1.0) return;
    const double length = end - start;
    const MinerSpec spec{e.label, hashes / length, e.reports_per_block};
    trace.reports.push_back(emit_report(spec, length, state, floor_, rng_));
  }

  GroundTruth ground_truth() const {
    GroundTruth truth;
    auto segment = [&](double start, double end, bool after) {
      RateSegment s;
      s.start = start;
      s.end = end;
      for (const auto& e : entities_) {
        const double r = after ? e.rate_after : e.rate_before;
        s.miners.push_back({e.label, r});
        s.network_rate += r;
      }
      truth.segments.push_back(std::move(s));
    };
    if (fork_ > 0.0 && fork_ < cfg_.duration_seconds) {
      segment(0.0, fork_, false);
      segment(fork_, cfg_.duration_seconds, true);
    } else {
      segment(0.0, cfg_.duration_seconds, fork_ <= 0.0);
    }
    return truth;
  }

  const SimConfig& cfg_;
  std::mt19937_64 rng_;
  std::vector<Entity> entities_;
  std::unordered_map<Digest256, std::size_t, Digest256Hasher> positions_;
  double fork_ = 0.0;
  double floor_ = 0.0;
};

} // namespace

double SimConfig::total_rate() const {
  double sum = 0.0;
  for (const auto& m : miners) sum += m.hash_rate;
  if (attacker) sum += attacker->total_rate;
  return sum;
}

void SimConfig::validate() const {
  if (miners.empty()) throw InvalidArgument("simulation needs at least one miner");
  std::set<std::string> labels;
  for (const auto& m : miners) {
    if (m.label.empty()) throw InvalidArgument("miner label is empty");
    if (!(m.hash_rate > 0.0) || !std::isfinite(m.hash_rate)) {
      throw InvalidArgument("miner '" + m.label + "': hash_rate must be positive");
    }
    if (!(m.reports_per_block >= 0.0)) {
      throw InvalidArgument("miner '" + m.label + "': reports_per_block must be non-negative");
    }
    if (!labels.insert(m.label).second) throw InvalidArgument("duplicate miner label '" + m.label + "'");
  }
  if (attacker) {
    const auto& a = *attacker;
    if (a.label.empty()) throw InvalidArgument("attacker label is empty");
    if (labels.count(a.label)) {
      throw InvalidArgument("attacker label '" + a.label + "' collides with an honest miner");
    }
    if (!(a.total_rate > 0.0)) throw InvalidArgument("attacker total_rate must be positive");
    if (!(a.divert_fraction >= 0.0 && a.divert_fraction <= 1.0)) {
      throw InvalidArgument("attacker divert_fraction must lie in [0, 1]");
    }
    if (!(a.reports_per_block >= 0.0)) throw InvalidArgument("attacker reports_per_block must be non-negative");
  }
  if (!(block_interval_seconds > 0.0)) throw InvalidArgument("block_interval_seconds must be positive");
  if (!(duration_seconds > 0.0)) throw InvalidArgument("duration_seconds must be positive");
  if (report_sigma < 0.0) throw InvalidArgument("report_sigma must be non-negative");
  if (propagation_window_seconds < 0.0) throw InvalidArgument("propagation window must be non-negative");
  const double expected = 1.0 / (target.unit() * total_rate());
  if (std::abs(expected / block_interval_seconds - 1.0) > 0.01) {
    throw InvalidArgument("target gives " + std::to_string(expected) + " s per block, not the configured " +
                          std::to_string(block_interval_seconds) + " s");
  }
}

SimConfig make_sim_config(std::vector<MinerSpec> miners, double block_interval_seconds, double duration_seconds,
                          std::uint64_t seed, ChainKind kind) {
  SimConfig cfg;
  cfg.miners = std::move(miners);
  cfg.block_interval_seconds = block_interval_seconds;
  cfg.duration_seconds = duration_seconds;
  cfg.seed = seed;
  cfg.kind = kind;
  cfg.propagation_window_seconds = chain_params(kind).propagation_window_seconds;
  cfg.target = target_for_rate(cfg.total_rate(), block_interval_seconds);
  return cfg;
}

double GroundTruth::network_rate_at(double time) const {
  for (const auto& s : segments) {
    if (time >= s.start && time < s.end) return s.network_rate;
  }
  return segments.empty() ? 0.0 : segments.back().network_rate;
}

double GroundTruth::miner_rate_at(const std::string& label, double time) const {
  const RateSegment* seg = nullptr;
  for (const auto& s : segments) {
    if (time >= s.start && time < s.end) {
      seg = &s;
      break;
    }
  }
  if (!seg && !segments.empty()) seg = &segments.back();
  if (!seg) return 0.0;
  for (const auto& m : seg->miners) {
    if (m.label == label) return m.rate;
  }
  return 0.0;
}

namespace {

template <class RateOf>
double time_average(const std::vector<RateSegment>& segments, const TimeWindow& w, RateOf rate_of) {
  if (!(w.length() > 0.0)) throw InvalidArgument("window must have positive length");
  double acc = 0.0;
  double covered = 0.0;
  for (const auto& s : segments) {
    const double a = std::max(s.start, w.start);
    const double b = std::min(s.end, w.end);
    if (b > a) {
      acc += rate_of(s) * (b - a);
      covered += b - a;
    }
  }
  // Window running past the trace end keeps the last segment's rate.
  if (covered < w.length() && !segments.empty()) acc += rate_of(segments.back()) * (w.length() - covered);
  return acc / w.length();
}

} // namespace

double GroundTruth::mean_network_rate(const TimeWindow& window) const {
  return time_average(segments, window, [](const RateSegment& s) { return s.network_rate; });
}

double GroundTruth::mean_miner_rate(const std::string& label, const TimeWindow& window) const {
  return time_average(segments, window, [&](const RateSegment& s) {
    for (const auto& m : s.miners) {
      if (m.label == label) return m.rate;
    }
    return 0.0;
  });
}

SyntheticTrace simulate(const SimConfig& config) {
  config.validate();
  return Simulation(config).run();
}

SyntheticTrace inject_attacker(const SyntheticTrace& trace, const AttackerSpec& attacker) {
  SimConfig cfg = trace.config;
  if (!(attacker.fork_time >= 0.0 && attacker.fork_time <= cfg.duration_seconds)) {
    throw InvalidArgument("fork_time lies outside the trace duration");
  }
  for (const auto& m : cfg.miners) {
    if (m.label == attacker.label) {
      throw InvalidArgument("attacker label '" + attacker.label + "' collides with an honest miner");
    }
  }
  cfg.attacker = attacker;
  cfg.target = target_for_rate(cfg.total_rate(), cfg.block_interval_seconds);
  return simulate(cfg);
}

double sample_min_hash_unit(double theta, double floor_unit, std::mt19937_64& rng) {
  // P(min > x) = (1 - x)^theta on [0, 1], so min = 1 - (1 - U)^(1/theta),
  // computed without cancellation for large theta.
  const double u = uniform01(rng);
  const double unit_min = -std::expm1(std::log1p(-u) / theta);
  return floor_unit + (1.0 - floor_unit) * unit_min;
}

StatusReport emit_report(const MinerSpec& miner, double interval_seconds, ReportChainState& state,
                         double floor_unit, std::mt19937_64& rng) {
  if (!(interval_seconds > 0.0)) throw InvalidArgument("interval length must be positive");
  const double theta = std::round(miner.hash_rate * interval_seconds);
  if (!(theta >= 1.0)) throw InvalidArgument("interval too short for miner rate");

  StatusReport r;
  r.miner = miner.label;
  r.interval_index = state.next_index++;
  r.interval_seconds = interval_seconds;
  double u = sample_min_hash_unit(theta, floor_unit, rng);
  r.min_hash = HashValue::from_unit(u);
  if (r.min_hash == HashValue()) r.min_hash = HashValue(std::uint64_t{1});
  r.report_nonce = random_digest(rng);
  r.chained_nonce = chain_nonce(state.last_chained, r.report_nonce);
  r.prior_block_id = state.prior_block_id;
  state.last_chained = r.chained_nonce;
  return r;
}

} // namespace hashrate
