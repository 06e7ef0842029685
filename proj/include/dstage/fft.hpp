/* Copyright 2026 The dstage Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef DSTAGE_FFT_HPP_
#define DSTAGE_FFT_HPP_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace dstage {

std::size_t next_pow2(std::size_t n);

// In-place iterative radix-2 FFT for a fixed power-of-two size.
class Fft {
 public:
  explicit Fft(std::size_t n);

  std::size_t size() const { return n_; }

  void forward(std::span<std::complex<double>> x) const;
  // Unnormalized inverse; caller divides by size().
  void inverse(std::span<std::complex<double>> x) const;

  // |X_k|^2 for k = 0 .. n/2 of the zero-padded real input.
  void power_spectrum(std::span<const double> frame,
                      std::vector<double>& out) const;

 private:
  void transform(std::span<std::complex<double>> x, bool inverse) const;

  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddle_;
};

}  // namespace dstage

#endif  // DSTAGE_FFT_HPP_
