#include "kldobs/monitor.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "kldobs/error.hpp"

namespace kldobs {

Detector make_detector(const LtiSystem& sys, const ObserverGain& gain, double false_alarm) {
  require_stable(gain);
  if (!(false_alarm > 0.0 && false_alarm < 1.0)) raise(ErrorKind::kDomain, "false-alarm rate must lie in (0, 1)");
  Detector d;
  d.gain = gain;
  d.residual_model = residual_covariance(sys, gain);
  d.false_alarm = false_alarm;
  d.n_y = sys.n_y();
  d.threshold = numkit::chi_square_quantile(false_alarm, sys.n_y());
  return d;
}

EvalSeries evaluate_residuals(const Detector& det, const std::vector<Vector>& residuals) {
  EvalSeries s;
  s.threshold = det.threshold;
  s.statistic.reserve(residuals.size());
  s.alarm.reserve(residuals.size());
  const Matrix& inv = det.residual_model.sigma_r_inv;
  for (const Vector& r : residuals) {
    if (r.size() != det.n_y) raise(ErrorKind::kDimension, "residual dimension != n_y");
    const double v = r.dot(inv * r);
    s.statistic.push_back(v);
    s.alarm.push_back(v > det.threshold ? 1 : 0);
  }
  return s;
}

EvalSeries mahalanobis_series(const Detector& det, const Trace& trace) {
  return evaluate_residuals(det, trace.residuals);
}

std::vector<double> kld_series(const LtiSystem& sys, const ObserverGain& gain, const AttackSchedule& schedule,
                               int horizon) {
  const ResidualModel rm = residual_covariance(sys, gain);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(horizon, 0)));
  for (const Vector& r : mean_residual(sys, gain, schedule, horizon)) out.push_back(0.5 * r.dot(rm.sigma_r_inv * r));
  return out;
}

namespace {

constexpr int kChunk = 64;

struct ChunkSums {
  std::vector<std::int64_t> alarms;
  std::vector<double> sum;
  std::vector<double> sum_sq;
};

}  // namespace

McReport monte_carlo_detection(const LtiSystem& sys, const Detector& det, const AttackSchedule& schedule,
                               int horizon, int trials, std::uint64_t base_seed, int workers) {
  if (trials < 1) raise(ErrorKind::kDomain, "trials must be >= 1");
  if (horizon < 1) raise(ErrorKind::kDomain, "horizon must be >= 1");
  const auto h = static_cast<std::size_t>(horizon);
  const int nchunks = (trials + kChunk - 1) / kChunk;
  std::vector<ChunkSums> chunks(static_cast<std::size_t>(nchunks));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      for (int c = next++; c < nchunks; c = next++) {
        ChunkSums& cs = chunks[static_cast<std::size_t>(c)];
        cs.alarms.assign(h, 0);
        cs.sum.assign(h, 0.0);
        cs.sum_sq.assign(h, 0.0);
        const int end = std::min(trials, (c + 1) * kChunk);
        for (int t = c * kChunk; t < end; ++t) {
          RandomStream stream(derive_seed(base_seed, static_cast<std::uint64_t>(t)));
          const Trace trace = simulate(sys, det.gain, schedule, horizon, stream);
          const EvalSeries s = mahalanobis_series(det, trace);
          for (std::size_t k = 0; k < h; ++k) {
            cs.alarms[k] += s.alarm[k];
            cs.sum[k] += s.statistic[k];
            cs.sum_sq[k] += s.statistic[k] * s.statistic[k];
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = nchunks;
    }
  };
  int nthreads = workers > 0 ? workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  nthreads = std::min(nthreads, nchunks);
  std::vector<std::thread> pool;
  for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  McReport r;
  r.trials = trials;
  r.horizon = horizon;
  r.onset = schedule.kind == ScheduleKind::kNone ? -1 : schedule.onset;
  r.base_seed = base_seed;
  r.threshold = det.threshold;
  std::vector<std::int64_t> alarms(h, 0);
  std::vector<double> sum(h, 0.0), sum_sq(h, 0.0);
  for (const ChunkSums& cs : chunks) {
    for (std::size_t k = 0; k < h; ++k) {
      alarms[k] += cs.alarms[k];
      sum[k] += cs.sum[k];
      sum_sq[k] += cs.sum_sq[k];
    }
  }
  const double n = trials;
  r.detection_probability.resize(h);
  r.mean_statistic.resize(h);
  r.statistic_variance.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    r.detection_probability[k] = static_cast<double>(alarms[k]) / n;
    r.mean_statistic[k] = sum[k] / n;
    r.statistic_variance[k] = trials > 1 ? std::max(0.0, (sum_sq[k] - sum[k] * sum[k] / n) / (n - 1.0)) : 0.0;
  }
  return r;
}

}  // namespace kldobs
