#include "scd/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "scd/errors.hpp"

namespace scd {

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5CDu};
  engine_.seed(seq);
}

double RngStream::uniform() { return double(next() >> 11) * 0x1.0p-53; }

double RngStream::uniform_open() { return (double(next() >> 11) + 0.5) * 0x1.0p-53; }

std::int64_t RngStream::poisson(double mean) {
  ++poissons_;
  if (!(mean > 0.0)) return 0;
  return mean < 10.0 ? poisson_inversion(mean) : poisson_ptrs(mean);
}

std::int64_t RngStream::poisson_inversion(double mean) {
  for (;;) {
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::int64_t k = 0;
    while (u >= cdf) {
      ++k;
      p *= mean / double(k);
      cdf += p;
      if (k > 1000) break;  // cdf rounding short of u; redraw
    }
    if (k <= 1000) return k;
  }
}

std::int64_t RngStream::poisson_ptrs(double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + mean + 0.43));
    if (us >= 0.07 && v <= v_r) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + double(k) * loglam - std::lgamma(double(k) + 1.0)) {
      return k;
    }
  }
}

std::int64_t RngStream::binomial(std::int64_t n, double p) {
  ++binomials_;
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - binomial_flipped(n, 1.0 - p);
  return binomial_flipped(n, p);
}

std::int64_t RngStream::binomial_flipped(std::int64_t n, double p) {
  return double(n) * p < 10.0 ? binomial_inversion(n, p) : binomial_btrs(n, p);
}

std::int64_t RngStream::binomial_inversion(std::int64_t n, double p) {
  const double q = 1.0 - p;
  const double s = p / q;
  const double a = double(n + 1) * s;
  const double r0 = std::exp(double(n) * std::log1p(-p));
  for (;;) {
    double r = r0;
    double u = uniform();
    std::int64_t k = 0;
    bool ok = true;
    while (u > r) {
      u -= r;
      ++k;
      if (k > n) {
        ok = false;
        break;
      }
      r *= a / double(k) - s;
    }
    if (ok) return k;
  }
}

std::int64_t RngStream::binomial_btrs(std::int64_t n, double p) {
  const double q = 1.0 - p;
  const double spq = std::sqrt(double(n) * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = double(n) * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const auto m = static_cast<std::int64_t>(std::floor(double(n + 1) * p));
  const double h = std::lgamma(double(m) + 1.0) + std::lgamma(double(n - m) + 1.0);
  for (;;) {
    const double u = uniform() - 0.5;
    double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + c));
    if (k < 0 || k > n) continue;
    if (us >= 0.07 && v <= v_r) return k;
    v = std::log(v * alpha / (a / (us * us) + b));
    if (v <= h - std::lgamma(double(k) + 1.0) - std::lgamma(double(n - k) + 1.0) + double(k - m) * lpq) {
      return k;
    }
  }
}

std::string RngStream::serialize() const {
  std::ostringstream out;
  out << engine_ << ' ' << uniforms_ << ' ' << poissons_ << ' ' << binomials_;
  return out.str();
}

RngStream RngStream::deserialize(const std::string& text) {
  RngStream r;
  std::istringstream in(text);
  in >> r.engine_ >> r.uniforms_ >> r.poissons_ >> r.binomials_;
  if (!in) throw CheckpointError("corrupt random-stream state");
  return r;
}

bool RngStream::operator==(const RngStream& other) const {
  return engine_ == other.engine_ && uniforms_ == other.uniforms_ && poissons_ == other.poissons_ &&
         binomials_ == other.binomials_;
}

}  // namespace scd
