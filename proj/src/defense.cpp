#include "sdwanfp/defense.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>

namespace sdwanfp {

std::string_view to_string(DefenseKind k) { return k == DefenseKind::fpa ? "fpa" : "random_noise"; }

DefenseKind defense_kind_from_string(std::string_view s) {
  if (s == "fpa") return DefenseKind::fpa;
  if (s == "random_noise") return DefenseKind::random_noise;
  throw ValidationError("unknown defense: " + std::string(s));
}

StepFeatures rms(std::span<const SequenceSample> samples) {
  StepFeatures sq{0, 0, 0};
  double n = 0;
  for (const auto& s : samples) {
    for (const auto& row : s.S) {
      for (std::size_t c = 0; c < 3; ++c) sq[c] += row[c] * row[c];
      n += 1;
    }
  }
  if (n == 0) throw ValidationError("rms: no time steps");
  for (auto& v : sq) v = std::sqrt(v / n);
  return sq;
}

Sequence add_random_noise(const Sequence& S, const StepFeatures& sigma, std::mt19937_64& rng) {
  for (double s : sigma) {
    if (!(s >= 0)) throw ValidationError("noise std must be >= 0");
  }
  Sequence out = S;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& row : out) {
    for (std::size_t c = 0; c < 3; ++c) {
      if (sigma[c] == 0) continue;
      row[c] = std::max(0.0, row[c] + sigma[c] * normal(rng));
    }
  }
  return out;
}

Sequence add_random_noise(const Sequence& S, const StepFeatures& sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return add_random_noise(S, sigma, rng);
}

double sample_laplace(double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  double x = 0;
  do {
    x = u(rng);
  } while (std::abs(x) >= 0.5);
  return -scale * std::copysign(1.0, x) * std::log1p(-2 * std::abs(x));
}

namespace {

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

}  // namespace

std::vector<double> fpa(std::span<const double> column, double lambda, int q, std::mt19937_64& rng) {
  const int n = static_cast<int>(column.size());
  if (n < 1) throw ValidationError("fpa: empty column");
  if (q < 1 || q > n) throw ValidationError("fpa: kept coefficients must be in [1, T]");
  if (!(lambda >= 0)) throw ValidationError("fpa: lambda must be >= 0");

  std::unique_ptr<fftw_complex[], FftwFree> buf(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n))));
  fftw_plan forward = fftw_plan_dft_1d(n, buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan inverse = fftw_plan_dft_1d(n, buf.get(), buf.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
  for (int i = 0; i < n; ++i) {
    buf[i][0] = column[static_cast<std::size_t>(i)];
    buf[i][1] = 0.0;
  }
  fftw_execute(forward);
  for (int k = 0; k < n; ++k) {
    if (k < q) {
      if (lambda > 0) {
        buf[k][0] += sample_laplace(lambda, rng);
        buf[k][1] += sample_laplace(lambda, rng);
      }
    } else {
      buf[k][0] = buf[k][1] = 0.0;
    }
  }
  fftw_execute(inverse);
  fftw_destroy_plan(forward);
  fftw_destroy_plan(inverse);

  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::max(0.0, buf[i][0] / n);
  return out;
}

std::vector<double> fpa(std::span<const double> column, double lambda, int q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return fpa(column, lambda, q, rng);
}

std::vector<SequenceSample> apply_defense(std::span<const SequenceSample> samples,
                                          const DefenseConfig& config,
                                          std::optional<StepFeatures> reference_rms) {
  if (!(config.noise_fraction >= 0) || !(config.lambda_fraction >= 0)) {
    throw ValidationError("defense fractions must be >= 0");
  }
  std::vector<SequenceSample> out(samples.begin(), samples.end());
  if (samples.empty()) return out;
  const StepFeatures ref = reference_rms ? *reference_rms : rms(samples);
  std::mt19937_64 rng(config.seed);

  for (auto& s : out) {
    if (config.kind == DefenseKind::random_noise) {
      StepFeatures sigma;
      for (std::size_t c = 0; c < 3; ++c) sigma[c] = config.noise_fraction * ref[c];
      s.S = add_random_noise(s.S, sigma, rng);
      continue;
    }
    const int t = static_cast<int>(s.S.size());
    const int q = config.kept_coefficients.value_or((t + 9) / 10);
    if (config.kept_coefficients && *config.kept_coefficients < 1) {
      throw ValidationError("kept_coefficients must be >= 1");
    }
    std::vector<double> col(s.S.size());
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < col.size(); ++i) col[i] = s.S[i][c];
      const auto perturbed = fpa(col, config.lambda_fraction * ref[c], std::min(q, t), rng);
      for (std::size_t i = 0; i < col.size(); ++i) s.S[i][c] = perturbed[i];
    }
  }
  return out;
}

}  // namespace sdwanfp
