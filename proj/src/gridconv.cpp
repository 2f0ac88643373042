#include "steinlab/gridconv.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

namespace steinlab {

Vector grid_convolve(const Vector& f, double dx, const std::function<double(double)>& k, double offset,
                     ConvolutionMethod method) {
  const Eigen::Index n = f.size();
  require(n >= 1 && dx > 0.0, "convolution needs a nonempty grid");
  // Kernel samples at lags m = -(n-1) .. n-1, stored at index m + n - 1.
  std::vector<double> lag(static_cast<std::size_t>(2 * n - 1));
  for (Eigen::Index m = -(n - 1); m <= n - 1; ++m)
    lag[static_cast<std::size_t>(m + n - 1)] = k(static_cast<double>(m) * dx + offset);

  if (method == ConvolutionMethod::automatic) method = n >= 1024 ? ConvolutionMethod::fft : ConvolutionMethod::direct;
  Vector out(n);
  if (method == ConvolutionMethod::direct) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) s += lag[static_cast<std::size_t>(i - j + n - 1)] * f[j];
      out[i] = s * dx;
    }
    return out;
  }

  std::size_t size = 1;
  while (size < static_cast<std::size_t>(3 * n)) size <<= 1;
  std::vector<double> a(size, 0.0), b(size, 0.0);
  for (Eigen::Index j = 0; j < n; ++j) a[static_cast<std::size_t>(j)] = f[j];
  for (std::size_t m = 0; m < lag.size(); ++m) b[m] = lag[m];
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fa, fb;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (std::size_t q = 0; q < fa.size(); ++q) fa[q] *= fb[q];
  std::vector<double> full;
  fft.inv(full, fa);
  // full[i + n - 1] = sum_j f_j lag[i - j + n - 1].
  for (Eigen::Index i = 0; i < n; ++i) out[i] = full[static_cast<std::size_t>(i + n - 1)] * dx;
  return out;
}

Vector central_difference(const Vector& f, double dx, int order) {
  const Eigen::Index n = f.size();
  require(n >= 2, "differences need at least two nodes");
  require(order == 2 || order == 4, "difference order must be 2 or 4");
  Vector d(n);
  d[0] = (f[1] - f[0]) / dx;
  d[n - 1] = (f[n - 1] - f[n - 2]) / dx;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (order == 4 && i >= 2 && i + 2 < n)
      d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * dx);
    else
      d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
  }
  return d;
}

}  // namespace steinlab
