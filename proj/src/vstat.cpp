#include <algorithm>
#include <cmath>
#include <numeric>

#include "depstat/vstat.hpp"

namespace depstat {

namespace {

std::vector<Eigen::VectorXd> rows_of(const Eigen::MatrixXd& sample) {
  std::vector<Eigen::VectorXd> rows(static_cast<std::size_t>(sample.rows()));
  for (Eigen::Index i = 0; i < sample.rows(); ++i) rows[i] = sample.row(i).transpose();
  return rows;
}

void check_sample(const KernelSpec& spec, const Eigen::MatrixXd& sample, const char* who) {
  if (spec.order > 3) throw UnsupportedError(std::string(who) + ": order m > 3 is not supported");
  require(sample.rows() >= 1, std::string(who) + ": empty sample");
  require(sample.cols() == spec.dim, std::string(who) + ": sample dimension != kernel dimension");
}

// Sum of f over index tuples; distinct restricts to pairwise-distinct
// indices. Outer index partial sums are reduced in fixed order.
double tuple_sum(const KernelSpec& spec, const std::vector<Eigen::VectorXd>& rows, bool distinct) {
  const std::size_t n = rows.size();
  const int m = spec.order;
  const bool sym = spec.tags.has(Tag::symmetric);
  std::vector<double> partial(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    std::vector<Eigen::VectorXd> args(static_cast<std::size_t>(m));
    args[0] = rows[i];
    NeumaierSum acc;
    if (m == 1) {
      acc.add(spec.eval(args));
    } else if (m == 2) {
      if (sym) {
        // f(x_i, x_j) = f(x_j, x_i): count j > i twice.
        if (!distinct) {
          args[1] = rows[i];
          acc.add(spec.eval(args));
        }
        for (std::size_t j = i + 1; j < n; ++j) {
          args[1] = rows[j];
          acc.add(2.0 * spec.eval(args));
        }
      } else {
        for (std::size_t j = 0; j < n; ++j) {
          if (distinct && j == i) continue;
          args[1] = rows[j];
          acc.add(spec.eval(args));
        }
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        if (distinct && j == i) continue;
        args[1] = rows[j];
        for (std::size_t k = 0; k < n; ++k) {
          if (distinct && (k == i || k == j)) continue;
          args[2] = rows[k];
          acc.add(spec.eval(args));
        }
      }
    }
    partial[i] = acc.value();
  });
  NeumaierSum total;
  for (double p : partial) total.add(p);
  return total.value();
}

// Inversions y[i] > y[j], i < j, by merge sort.
std::int64_t count_inversions(std::vector<double>& y, std::vector<double>& buf, std::size_t lo,
                              std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = count_inversions(y, buf, lo, mid) + count_inversions(y, buf, mid, hi);
  std::size_t a = lo, b = mid, k = lo;
  while (a < mid && b < hi) {
    if (y[b] < y[a]) {
      inv += static_cast<std::int64_t>(mid - a);
      buf[k++] = y[b++];
    } else {
      buf[k++] = y[a++];
    }
  }
  while (a < mid) buf[k++] = y[a++];
  while (b < hi) buf[k++] = y[b++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            y.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

std::int64_t tied_pairs(const std::vector<double>& sorted) {
  std::int64_t total = 0, run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// a_i = #{j : v_j < v_i} - #{j : v_j > v_i}
std::vector<std::int64_t> sign_rank_sums(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const std::size_t n = static_cast<std::size_t>(v.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<std::int64_t> out(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start;
    while (end + 1 < n && v[order[end + 1]] == v[order[start]]) ++end;
    auto less = static_cast<std::int64_t>(start);
    auto greater = static_cast<std::int64_t>(n - 1 - end);
    for (std::size_t k = start; k <= end; ++k) out[order[k]] = less - greater;
    start = end + 1;
  }
  return out;
}

}  // namespace

double v_statistic(const KernelSpec& spec, const Eigen::MatrixXd& sample) {
  check_sample(spec, sample, "v_statistic");
  auto rows = rows_of(sample);
  double n = static_cast<double>(rows.size());
  return tuple_sum(spec, rows, false) / std::pow(n, spec.order);
}

double u_statistic(const KernelSpec& spec, const Eigen::MatrixXd& sample) {
  check_sample(spec, sample, "u_statistic");
  require(sample.rows() >= spec.order, "u_statistic: need at least m observations");
  auto rows = rows_of(sample);
  double n = static_cast<double>(rows.size());
  double count = 1.0;
  for (int i = 0; i < spec.order; ++i) count *= n - i;
  return tuple_sum(spec, rows, true) / count;
}

std::int64_t kendall_score(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& y) {
  require(x.size() == y.size(), "kendall_score: length mismatch");
  const std::size_t n = static_cast<std::size_t>(x.size());
  if (n < 2) return 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::int64_t n1 = 0, n3 = 0;
  {
    std::int64_t run_x = 1, run_xy = 1;
    for (std::size_t k = 1; k <= n; ++k) {
      bool same_x = k < n && x[order[k]] == x[order[k - 1]];
      bool same_xy = same_x && y[order[k]] == y[order[k - 1]];
      if (same_xy) {
        ++run_xy;
      } else {
        n3 += run_xy * (run_xy - 1) / 2;
        run_xy = 1;
      }
      if (same_x) {
        ++run_x;
      } else {
        n1 += run_x * (run_x - 1) / 2;
        run_x = 1;
      }
    }
  }
  std::vector<double> ys(n), buf(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = y[order[k]];
  std::int64_t discordant = count_inversions(ys, buf, 0, n);
  std::int64_t n2 = tied_pairs(ys);  // ys is sorted now
  std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  return n0 - n1 - n2 + n3 - 2 * discordant;
}

double kendall_tau_fast(const Eigen::MatrixXd& sample) {
  require(sample.cols() == 2, "kendall_tau_fast: sample must be n x 2");
  require(sample.rows() >= 2, "kendall_tau_fast: need n >= 2");
  const double n = static_cast<double>(sample.rows());
  double S = static_cast<double>(kendall_score(sample.col(0), sample.col(1)));
  return 2.0 * S / (n * (n - 1.0));
}

std::int64_t spearman_score(const Eigen::MatrixXd& sample) {
  require(sample.cols() == 2, "spearman_score: sample must be n x 2");
  auto a = sign_rank_sums(sample.col(0));
  auto b = sign_rank_sums(sample.col(1));
  std::int64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double spearman_rho(const Eigen::MatrixXd& sample) {
  require(sample.rows() >= 1, "spearman_rho: empty sample");
  const double n = static_cast<double>(sample.rows());
  return static_cast<double>(spearman_score(sample)) / (n * n * n);
}

ResidualProbability residual_probability(int n, int r, int m, const std::vector<double>& tails,
                                         int total_jumps, double M2, double D) {
  require(n >= 1, "residual_probability: n must be >= 1");
  require(r >= 1 && r <= m, "residual_probability: need 1 <= r <= m");
  require(total_jumps >= 0 && M2 >= 0 && D >= 0, "residual_probability: inputs must be nonnegative");
  double nn = static_cast<double>(n);
  double tail = 0.0;
  for (double p : tails) {
    require(p >= 0, "residual_probability: tail probabilities must be nonnegative");
    tail += p;
  }
  ResidualProbability out;
  out.value = nn * tail + nn * nn * total_jumps * M2 * D;
  out.vacuous = out.value >= 1.0;
  return out;
}

}  // namespace depstat
