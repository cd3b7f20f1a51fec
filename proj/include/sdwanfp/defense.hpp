#ifndef SDWANFP_DEFENSE_HPP
#define SDWANFP_DEFENSE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "sdwanfp/features.hpp"

namespace sdwanfp {

enum class DefenseKind : std::uint8_t { random_noise, fpa };

std::string_view to_string(DefenseKind k);
DefenseKind defense_kind_from_string(std::string_view s);

struct DefenseConfig {
  DefenseKind kind = DefenseKind::fpa;
  double noise_fraction = 0.10;   // Gaussian std as a fraction of column RMS
  double lambda_fraction = 0.30;  // Laplace scale as a fraction of column RMS
  // Retained DFT coefficients; unset means ceil(T / 10).
  std::optional<int> kept_coefficients;
  std::uint64_t seed = 1;
};

/// sqrt(mean of squares) per feature column over every step of every sample.
StepFeatures rms(std::span<const SequenceSample> samples);

/// Independent N(0, sigma[c]^2) on column c, clamped at 0.
Sequence add_random_noise(const Sequence& S, const StepFeatures& sigma, std::mt19937_64& rng);
Sequence add_random_noise(const Sequence& S, const StepFeatures& sigma, std::uint64_t seed);

/// DFT, Laplace(lambda) on the real and imaginary parts of the first q
/// coefficients, remaining coefficients zeroed, inverse DFT, real part,
/// clamped at 0.
std::vector<double> fpa(std::span<const double> column, double lambda, int q, std::mt19937_64& rng);
std::vector<double> fpa(std::span<const double> column, double lambda, int q, std::uint64_t seed);

/// Laplace(0, scale) by inverse CDF.
double sample_laplace(double scale, std::mt19937_64& rng);

/// Perturbs S of every sample; direction and session counts are untouched.
/// `reference_rms` defaults to the RMS of `samples` themselves.
std::vector<SequenceSample> apply_defense(std::span<const SequenceSample> samples,
                                          const DefenseConfig& config,
                                          std::optional<StepFeatures> reference_rms = {});

}  // namespace sdwanfp

#endif  // SDWANFP_DEFENSE_HPP
