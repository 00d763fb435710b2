#pragma once

#include <memory>

#include "vmptrack/types.hpp"

namespace vmptrack {

// Unnormalized complex DFT of a fixed length, backed by FFTW.
//   forward:  X[k] = sum_s x[s] exp(-i 2 pi k s / N)
//   backward: x[s] = sum_k X[k] exp(+i 2 pi k s / N)
// Plans are created once; execution is safe from several threads.
class Fft {
 public:
  explicit Fft(int length);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&&) noexcept;
  Fft& operator=(Fft&&) noexcept;

  int length() const { return length_; }
  void forward(const CVec& in, CVec& out) const;
  void backward(const CVec& in, CVec& out) const;

 private:
  struct Plans;
  int length_ = 0;
  std::unique_ptr<Plans> plans_;
};

}  // namespace vmptrack
