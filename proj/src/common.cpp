#include "kfp/common.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace kfp {

namespace {

constexpr std::int64_t kBlockSize = 8192;

// Combine per-block values with a fixed-shape pairwise tree. The shape only
// depends on the number of blocks, never on the worker count.
double pairwise_combine(std::vector<double>& v, const std::function<double(double, double)>& op) {
  if (v.empty()) return 0.0;
  std::size_t n = v.size();
  while (n > 1) {
    std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i + half < n; ++i) v[i] = op(v[i], v[i + half]);
    n = half;
  }
  return v[0];
}

std::vector<double> block_map(std::int64_t n, const std::function<double(std::int64_t)>& f,
                              bool want_max) {
  const std::int64_t nblocks = (n + kBlockSize - 1) / kBlockSize;
  std::vector<double> partial(static_cast<std::size_t>(std::max<std::int64_t>(nblocks, 0)), 0.0);
  if (nblocks == 0) return partial;

  auto run_block = [&](std::int64_t b) {
    const std::int64_t begin = b * kBlockSize;
    const std::int64_t end = std::min(n, begin + kBlockSize);
    double acc = want_max ? -std::numeric_limits<double>::infinity() : 0.0;
    for (std::int64_t i = begin; i < end; ++i) {
      const double v = f(i);
      acc = want_max ? std::max(acc, v) : acc + v;
    }
    partial[static_cast<std::size_t>(b)] = acc;
  };

  const int nw = std::min<std::int64_t>(worker_count(), nblocks);
  if (nw <= 1) {
    for (std::int64_t b = 0; b < nblocks; ++b) run_block(b);
  } else {
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w) {
      pool.emplace_back([&] {
        for (std::int64_t b = next.fetch_add(1); b < nblocks; b = next.fetch_add(1)) run_block(b);
      });
    }
    for (auto& th : pool) th.join();
  }
  return partial;
}

}  // namespace

int worker_count() {
  if (const char* env = std::getenv("KFP_WORKERS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

double block_sum(std::int64_t n, const std::function<double(std::int64_t)>& f) {
  auto partial = block_map(n, f, /*want_max=*/false);
  return pairwise_combine(partial, [](double a, double b) { return a + b; });
}

double block_max(std::int64_t n, const std::function<double(std::int64_t)>& f) {
  auto partial = block_map(n, f, /*want_max=*/true);
  if (partial.empty()) return -std::numeric_limits<double>::infinity();
  return pairwise_combine(partial, [](double a, double b) { return std::max(a, b); });
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ValidationError("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw ValidationError("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += e * e;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, double floor,
                   int* used) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] > floor && x[i] > 0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (used) *used = static_cast<int>(lx.size());
  return fit_line(lx, ly);
}

}  // namespace kfp
