#include "vmptrack/fft.hpp"

#include <mutex>

#include <fftw3.h>

namespace vmptrack {
namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(const cdouble* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<cdouble*>(p));
}

}  // namespace

struct Fft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

Fft::Fft(int length) : length_(length), plans_(std::make_unique<Plans>()) {
  if (length <= 0) throw ConfigError("fft length must be positive");
  CVec scratch_in(length), scratch_out(length);
  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->forward = fftw_plan_dft_1d(length, as_fftw(scratch_in.data()), as_fftw(scratch_out.data()),
                                     FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->backward = fftw_plan_dft_1d(length, as_fftw(scratch_in.data()), as_fftw(scratch_out.data()),
                                      FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

Fft::~Fft() {
  if (!plans_) return;
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
}

Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::forward(const CVec& in, CVec& out) const {
  if (in.size() != length_) throw std::invalid_argument("fft: input length mismatch");
  out.resize(length_);
  fftw_execute_dft(plans_->forward, as_fftw(in.data()), as_fftw(out.data()));
}

void Fft::backward(const CVec& in, CVec& out) const {
  if (in.size() != length_) throw std::invalid_argument("fft: input length mismatch");
  out.resize(length_);
  fftw_execute_dft(plans_->backward, as_fftw(in.data()), as_fftw(out.data()));
}

}  // namespace vmptrack
