#include "matchq/simulator.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <stdexcept>

#include "matchq/rng.hpp"

namespace matchq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Customer {
  double arrival = 0.0;
  double deadline = 0.0;
  bool alive = true;
};

// FIFO line of one class with lazily-deleted expiry heap: matched customers
// leave a tombstone that is skipped when it surfaces.
class WaitingLine {
 public:
  void add(double arrival, double deadline) {
    const std::uint32_t id = static_cast<std::uint32_t>(arena_.size());
    arena_.push_back({arrival, deadline, true});
    fifo_.push_back(id);
    expiry_.emplace(deadline, id);
    ++alive_;
  }

  std::uint64_t size() const { return alive_; }

  double next_expiry() {
    while (!expiry_.empty() && !arena_[expiry_.top().second].alive) expiry_.pop();
    return expiry_.empty() ? kInf : expiry_.top().first;
  }

  // Departure of the earliest-deadline customer; returns its arrival time.
  double expire_front() {
    while (!expiry_.empty() && !arena_[expiry_.top().second].alive) expiry_.pop();
    const std::uint32_t id = expiry_.top().second;
    expiry_.pop();
    arena_[id].alive = false;
    --alive_;
    return arena_[id].arrival;
  }

  // Departure of the oldest waiting customer (First-Come-First-Match).
  double match_front() {
    for (;;) {
      const std::uint32_t id = fifo_.front();
      fifo_.pop_front();
      if (arena_[id].alive) {
        arena_[id].alive = false;
        --alive_;
        return arena_[id].arrival;
      }
    }
  }

 private:
  std::uint64_t alive_ = 0;
  std::vector<Customer> arena_;
  std::deque<std::uint32_t> fifo_;
  std::priority_queue<std::pair<double, std::uint32_t>,
                      std::vector<std::pair<double, std::uint32_t>>,
                      std::greater<>>
      expiry_;
};

enum class EventKind { ArrivalA, ArrivalB, ExpiryA, ExpiryB };

void record_sequences(const std::vector<MarkEvent>& log, double lo, double hi,
                      int kmax, int samples, Xoshiro256PlusPlus& rng,
                      SequenceFreq& backward, SequenceFreq& forward) {
  if (log.empty() || !(hi > lo)) return;
  std::vector<std::vector<std::uint64_t>> back_counts(kmax + 1),
      fwd_counts(kmax + 1);
  std::vector<std::uint64_t> back_valid(kmax + 1, 0), fwd_valid(kmax + 1, 0);
  const auto seqs_per_len = [&](int len) {
    std::uint64_t c = 1;
    for (int i = 0; i < len; ++i) c *= 3;
    return c;
  };
  for (int len = 1; len <= kmax; ++len) {
    back_counts[len].assign(seqs_per_len(len), 0);
    fwd_counts[len].assign(seqs_per_len(len), 0);
  }

  for (int s = 0; s < samples; ++s) {
    const double t = lo + (hi - lo) * rng.uniform01();
    const auto it = std::upper_bound(
        log.begin(), log.end(), t,
        [](double v, const MarkEvent& ev) { return v < ev.time; });
    const std::int64_t idx = it - log.begin();
    for (int len = 1; len <= kmax; ++len) {
      if (idx >= len) {
        std::uint64_t code = 0;
        for (int r = 1; r <= len; ++r)  // i1 = most recent before t
          code = code * 3 + (static_cast<std::uint64_t>(log[idx - r].mark) - 1);
        ++back_counts[len][code];
        ++back_valid[len];
      }
      if (idx + len <= static_cast<std::int64_t>(log.size())) {
        std::uint64_t code = 0;
        for (int r = 0; r < len; ++r)
          code = code * 3 + (static_cast<std::uint64_t>(log[idx + r].mark) - 1);
        ++fwd_counts[len][code];
        ++fwd_valid[len];
      }
    }
  }

  const auto decode = [](std::uint64_t code, int len) {
    std::vector<Mark> seq(len);
    for (int r = len - 1; r >= 0; --r) {
      seq[r] = static_cast<Mark>(code % 3 + 1);
      code /= 3;
    }
    return seq;
  };
  for (int len = 1; len <= kmax; ++len) {
    for (std::uint64_t code = 0; code < seqs_per_len(len); ++code) {
      const std::string key = sequence_key(decode(code, len));
      backward[key] = back_valid[len]
                          ? static_cast<double>(back_counts[len][code]) / back_valid[len]
                          : 0.0;
      forward[key] = fwd_valid[len]
                         ? static_cast<double>(fwd_counts[len][code]) / fwd_valid[len]
                         : 0.0;
    }
  }
}

}  // namespace

bool EstimateCI::contains(double x) const { return std::abs(x - mean) <= half_width; }

EstimateCI student_t_ci(const std::vector<double>& samples, double confidence) {
  EstimateCI ci;
  const std::size_t r = samples.size();
  if (r == 0) return ci;
  double sum = 0.0;
  for (double x : samples) sum += x;
  ci.mean = sum / static_cast<double>(r);
  if (r == 1) {
    ci.half_width = kInf;
    return ci;
  }
  double ss = 0.0;
  for (double x : samples) ss += (x - ci.mean) * (x - ci.mean);
  const double stderr_mean =
      std::sqrt(ss / static_cast<double>(r - 1) / static_cast<double>(r));
  const boost::math::students_t dist(static_cast<double>(r - 1));
  const double q = boost::math::quantile(dist, 0.5 + confidence / 2.0);
  ci.half_width = q * stderr_mean;
  return ci;
}

std::string sequence_key(const std::vector<Mark>& seq) {
  std::string key;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) key += ',';
    key += mark_name(seq[i]);
  }
  return key;
}

std::vector<std::vector<Mark>> all_mark_sequences(int length) {
  std::vector<std::vector<Mark>> out;
  std::uint64_t count = 1;
  for (int i = 0; i < length; ++i) count *= 3;
  for (std::uint64_t code = 0; code < count; ++code) {
    std::vector<Mark> seq(length);
    std::uint64_t c = code;
    for (int r = length - 1; r >= 0; --r) {
      seq[r] = static_cast<Mark>(c % 3 + 1);
      c /= 3;
    }
    out.push_back(std::move(seq));
  }
  return out;
}

ReplicationResult simulate_replication(const SimConfig& cfg, std::uint64_t seed) {
  cfg.params.validate();
  if (cfg.events == 0 && !(cfg.time_horizon > 0.0))
    throw std::invalid_argument("simulate: event or time budget required");
  if (cfg.warmup_fraction < 0.0 || cfg.warmup_fraction >= 1.0)
    throw std::invalid_argument("simulate: warmup_fraction must be in [0, 1)");

  const Params& p = cfg.params;
  Xoshiro256PlusPlus rng(seed);
  WaitingLine line_a, line_b;

  ReplicationResult rep;
  const int cap = cfg.arrival_state_cap;
  rep.seen_at_arrival = Matrix::Zero(cap + 1, cap + 1);

  const bool by_events = cfg.events > 0;
  const std::uint64_t warmup_events =
      by_events ? static_cast<std::uint64_t>(
                      static_cast<double>(cfg.events) * cfg.warmup_fraction)
                : 0;
  double warmup_end = by_events ? kInf : cfg.time_horizon * cfg.warmup_fraction;

  double t = 0.0;
  double next_a = rng.exponential(p.lambda1);
  double next_b = rng.exponential(p.lambda2);
  double area_q1 = 0.0, area_q2 = 0.0;
  double sojourn_sum_a = 0.0, sojourn_sum_b = 0.0;
  std::uint64_t event_count = 0;

  const auto record_departure = [&](double arrival, double now, Mark mark,
                                    bool is_a) {
    if (now >= warmup_end) {
      if (mark == Mark::A) ++rep.departures_A_imp;
      if (mark == Mark::B) ++rep.departures_B_imp;
      if (arrival >= warmup_end) {
        if (is_a) {
          sojourn_sum_a += now - arrival;
          ++rep.sojourn_count_A;
        } else {
          sojourn_sum_b += now - arrival;
          ++rep.sojourn_count_B;
        }
      }
    }
  };

  for (;;) {
    if (by_events && event_count == cfg.events) break;

    const double exp_a = line_a.next_expiry();
    const double exp_b = line_b.next_expiry();
    double t_next = next_a;
    EventKind kind = EventKind::ArrivalA;
    // Tie order: A arrival, B arrival, A expiry, B expiry.
    if (next_b < t_next) { t_next = next_b; kind = EventKind::ArrivalB; }
    if (exp_a < t_next) { t_next = exp_a; kind = EventKind::ExpiryA; }
    if (exp_b < t_next) { t_next = exp_b; kind = EventKind::ExpiryB; }

    if (!by_events && t_next > cfg.time_horizon) {
      const double lo = std::max(t, warmup_end);
      if (cfg.time_horizon > lo) {
        area_q1 += static_cast<double>(line_a.size()) * (cfg.time_horizon - lo);
        area_q2 += static_cast<double>(line_b.size()) * (cfg.time_horizon - lo);
      }
      t = cfg.time_horizon;
      break;
    }

    {
      const double lo = std::max(t, warmup_end);
      if (t_next > lo) {
        area_q1 += static_cast<double>(line_a.size()) * (t_next - lo);
        area_q2 += static_cast<double>(line_b.size()) * (t_next - lo);
      }
    }
    t = t_next;

    switch (kind) {
      case EventKind::ArrivalA: {
        if (t >= warmup_end) {
          const auto i = std::min<std::uint64_t>(line_a.size(), cap);
          const auto j = std::min<std::uint64_t>(line_b.size(), cap);
          rep.seen_at_arrival(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(j)) += 1.0;
          ++rep.arrivals_A_seen;
        }
        line_a.add(t, t + rng.exponential(p.theta1));
        next_a = t + rng.exponential(p.lambda1);
        break;
      }
      case EventKind::ArrivalB: {
        line_b.add(t, t + rng.exponential(p.theta2));
        next_b = t + rng.exponential(p.lambda2);
        break;
      }
      case EventKind::ExpiryA:
        record_departure(line_a.expire_front(), t, Mark::A, true);
        if (t >= warmup_end) rep.mark_log.push_back({t, Mark::A});
        break;
      case EventKind::ExpiryB:
        record_departure(line_b.expire_front(), t, Mark::B, false);
        if (t >= warmup_end) rep.mark_log.push_back({t, Mark::B});
        break;
    }

    // Eager matching: an arrival can complete at most one group.
    if (line_a.size() >= static_cast<std::uint64_t>(p.m) &&
        line_b.size() >= static_cast<std::uint64_t>(p.n)) {
      for (int c = 0; c < p.m; ++c)
        record_departure(line_a.match_front(), t, Mark::AB, true);
      for (int c = 0; c < p.n; ++c)
        record_departure(line_b.match_front(), t, Mark::AB, false);
      if (t >= warmup_end) {
        ++rep.departures_AB;
        rep.mark_log.push_back({t, Mark::AB});
      }
    }

    ++event_count;
    if (by_events && event_count == warmup_events) warmup_end = t;
  }

  rep.warmup_end = std::min(warmup_end, t);
  rep.end_time = t;
  rep.observed_time = std::max(0.0, rep.end_time - rep.warmup_end);
  if (rep.observed_time > 0.0) {
    rep.mean_q1 = area_q1 / rep.observed_time;
    rep.mean_q2 = area_q2 / rep.observed_time;
    rep.rate_A_imp = static_cast<double>(rep.departures_A_imp) / rep.observed_time;
    rep.rate_B_imp = static_cast<double>(rep.departures_B_imp) / rep.observed_time;
    rep.rate_AB = static_cast<double>(rep.departures_AB) / rep.observed_time;
  }
  rep.mean_sojourn_A =
      rep.sojourn_count_A ? sojourn_sum_a / static_cast<double>(rep.sojourn_count_A) : 0.0;
  rep.mean_sojourn_B =
      rep.sojourn_count_B ? sojourn_sum_b / static_cast<double>(rep.sojourn_count_B) : 0.0;
  rep.censored_A = line_a.size();
  rep.censored_B = line_b.size();

  const std::uint64_t dep_total =
      rep.departures_A_imp + rep.departures_B_imp + rep.departures_AB;
  if (dep_total > 0) {
    rep.at_departure_freq = {
        static_cast<double>(rep.departures_A_imp) / static_cast<double>(dep_total),
        static_cast<double>(rep.departures_B_imp) / static_cast<double>(dep_total),
        static_cast<double>(rep.departures_AB) / static_cast<double>(dep_total)};
  }

  record_sequences(rep.mark_log, rep.warmup_end, rep.end_time,
                   cfg.mark_sequence_kmax, cfg.mark_samples, rng,
                   rep.backward_freq, rep.forward_freq);
  if (!cfg.retain_mark_log) rep.mark_log.clear();
  return rep;
}

SimResult simulate(const SimConfig& cfg) {
  if (cfg.replications < 1)
    throw std::invalid_argument("simulate: replications must be >= 1");
  SimResult result;
  result.config = cfg;
  result.reps.reserve(cfg.replications);
  for (int r = 0; r < cfg.replications; ++r)
    result.reps.push_back(simulate_replication(cfg, cfg.seed + static_cast<std::uint64_t>(r)));

  const auto collect = [&](auto member) {
    std::vector<double> xs;
    xs.reserve(result.reps.size());
    for (const ReplicationResult& rep : result.reps) xs.push_back(member(rep));
    return student_t_ci(xs);
  };
  result.mean_q1 = collect([](const ReplicationResult& r) { return r.mean_q1; });
  result.mean_q2 = collect([](const ReplicationResult& r) { return r.mean_q2; });
  result.sojourn_A = collect([](const ReplicationResult& r) { return r.mean_sojourn_A; });
  result.sojourn_B = collect([](const ReplicationResult& r) { return r.mean_sojourn_B; });
  result.rate_A_imp = collect([](const ReplicationResult& r) { return r.rate_A_imp; });
  result.rate_B_imp = collect([](const ReplicationResult& r) { return r.rate_B_imp; });
  result.rate_AB = collect([](const ReplicationResult& r) { return r.rate_AB; });

  const int cap = cfg.arrival_state_cap;
  result.seen_at_arrival_freq = Matrix::Zero(cap + 1, cap + 1);
  double total = 0.0;
  for (const ReplicationResult& rep : result.reps) {
    result.seen_at_arrival_freq += rep.seen_at_arrival;
    total += static_cast<double>(rep.arrivals_A_seen);
  }
  if (total > 0.0) result.seen_at_arrival_freq /= total;
  return result;
}

SequenceTable empirical_mark_sequences(const SimResult& result, int k_max) {
  if (k_max < 1 || k_max > result.config.mark_sequence_kmax)
    throw std::invalid_argument(
        "empirical_mark_sequences: k_max outside the recorded range");
  for (const ReplicationResult& rep : result.reps) {
    const std::uint64_t logged =
        rep.departures_A_imp + rep.departures_B_imp + rep.departures_AB;
    if (logged < static_cast<std::uint64_t>(k_max))
      throw std::invalid_argument(
          "empirical_mark_sequences: k_max exceeds a replication's log");
  }

  SequenceTable table;
  table.k_max = k_max;
  for (int len = 1; len <= k_max; ++len) {
    for (const std::vector<Mark>& seq : all_mark_sequences(len)) {
      const std::string key = sequence_key(seq);
      std::vector<double> back, fwd;
      for (const ReplicationResult& rep : result.reps) {
        const auto bit = rep.backward_freq.find(key);
        back.push_back(bit == rep.backward_freq.end() ? 0.0 : bit->second);
        const auto fit = rep.forward_freq.find(key);
        fwd.push_back(fit == rep.forward_freq.end() ? 0.0 : fit->second);
      }
      table.backward[key] = student_t_ci(back);
      table.forward[key] = student_t_ci(fwd);
    }
  }
  return table;
}

EstimateCI at_departure_ci(const SimResult& result, Mark mark) {
  const std::size_t idx = static_cast<std::size_t>(mark) - 1;
  std::vector<double> xs;
  for (const ReplicationResult& rep : result.reps) xs.push_back(rep.at_departure_freq[idx]);
  return student_t_ci(xs);
}

}  // namespace matchq
