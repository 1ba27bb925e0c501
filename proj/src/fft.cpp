#include "kdvlab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "kdvlab/error.hpp"

namespace kdvlab {

namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan backward;
};

// The FFTW planner is not re-entrant; execution through the new-array
// interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(int n) {
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p{fftw_plan_dft_r2c_1d(n, in, out, flags), fftw_plan_dft_c2r_1d(n, out, in, flags)};
  fftw_free(in);
  fftw_free(out);
  if (p.forward == nullptr || p.backward == nullptr) {
    throw Error("FFTW failed to create a plan of size " + std::to_string(n));
  }
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealTransform::RealTransform(int n) : n_(n) {
  if (n < 2 || n % 2 != 0) {
    throw InvalidArgument("transform size must be even and >= 2, got " + std::to_string(n));
  }
  const PlanPair p = plans_for(n);
  forward_ = p.forward;
  backward_ = p.backward;
  spectrum_.resize(n / 2 + 1);
  values_.resize(n);
}

void RealTransform::to_grid(std::span<const Complex> c, std::span<double> u) {
  const std::size_t modes = c.size();
  if (modes == 0 || modes > static_cast<std::size_t>(n_ / 2) || u.size() != static_cast<std::size_t>(n_)) {
    throw InvalidArgument("to_grid: inconsistent sizes");
  }
  std::fill(spectrum_.begin(), spectrum_.end(), Complex{});
  spectrum_[0] = Complex(c[0].real(), 0.0);
  for (std::size_t k = 1; k < modes; ++k) spectrum_[k] = c[k];
  fftw_execute_dft_c2r(static_cast<fftw_plan>(backward_),
                       reinterpret_cast<fftw_complex*>(spectrum_.data()), u.data());
}

void RealTransform::to_modes(std::span<const double> u, std::span<Complex> c) {
  if (u.size() != static_cast<std::size_t>(n_) || c.size() > static_cast<std::size_t>(n_ / 2)) {
    throw InvalidArgument("to_modes: inconsistent sizes");
  }
  std::copy(u.begin(), u.end(), values_.begin());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_), values_.data(),
                       reinterpret_cast<fftw_complex*>(spectrum_.data()));
  const double scale = 1.0 / n_;
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = spectrum_[k] * scale;
}

}  // namespace kdvlab
