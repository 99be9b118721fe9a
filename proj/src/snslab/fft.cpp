#include "snslab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace snslab {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

  const PlanPair& get(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    const std::size_t size = static_cast<std::size_t>(n) * n * n;
    std::vector<Complex> a(size), b(size);
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p;
    p.forward = fftw_plan_dft_3d(n, n, n, pa, pb, FFTW_FORWARD, flags);
    p.backward = fftw_plan_dft_3d(n, n, n, pa, pb, FFTW_BACKWARD, flags);
    if (!p.forward || !p.backward) throw std::runtime_error("fftw planning failed");
    return plans_.emplace(n, p).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<int, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void execute(fftw_plan plan, int n, std::span<const Complex> in, std::span<Complex> out) {
  const std::size_t size = static_cast<std::size_t>(n) * n * n;
  if (in.size() != size || out.size() != size) throw std::invalid_argument("fft: buffer size mismatch");
  // fftw never writes to the input of an out-of-place complex transform.
  auto* pin = reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data()));
  auto* pout = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(plan, pin, pout);
}

}  // namespace

void fft_forward(int n, std::span<const Complex> in, std::span<Complex> out) {
  execute(cache().get(n).forward, n, in, out);
}

void fft_backward(int n, std::span<const Complex> in, std::span<Complex> out) {
  execute(cache().get(n).backward, n, in, out);
}

}  // namespace snslab
