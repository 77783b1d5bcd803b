#pragma once

// Random stream used by every stochastic operation.
//
// Generator: std::mt19937_64 (bit-exact across conforming standard
// libraries), seeded through std::seed_seq from (seed, stream id) so replicas
// get independent streams. Variates are produced here rather than through
// <random> distributions, whose algorithms are implementation-defined:
//   uniform    53-bit mantissa from the top bits of one draw
//   Poisson    sequential-search inversion for mean < 10, Hormann's PTRS
//              transformed rejection otherwise
//   binomial   sequential-search inversion for n*min(p,1-p) < 10, Hormann's
//              BTRS transformed rejection otherwise

#include <cstdint>
#include <random>
#include <string>

namespace scd {

class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream);

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1); never returns 0 or 1.
  double uniform_open();
  std::int64_t poisson(double mean);
  std::int64_t binomial(std::int64_t n, double p);

  std::uint64_t uniforms_drawn() const { return uniforms_; }
  std::uint64_t poissons_drawn() const { return poissons_; }
  std::uint64_t binomials_drawn() const { return binomials_; }

  /// Full generator state plus counters as text, for checkpoints.
  std::string serialize() const;
  static RngStream deserialize(const std::string& text);

  bool operator==(const RngStream& other) const;

 private:
  std::uint64_t next() {
    ++uniforms_;
    return engine_();
  }
  std::int64_t poisson_inversion(double mean);
  std::int64_t poisson_ptrs(double mean);
  std::int64_t binomial_flipped(std::int64_t n, double p);
  std::int64_t binomial_inversion(std::int64_t n, double p);
  std::int64_t binomial_btrs(std::int64_t n, double p);

  std::mt19937_64 engine_;
  std::uint64_t uniforms_ = 0;
  std::uint64_t poissons_ = 0;
  std::uint64_t binomials_ = 0;
};

}  // namespace scd
