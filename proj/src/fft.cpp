#include "osfde/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace osfde::fft {
namespace {

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  explicit PlanPair(int n) {
    std::vector<Complex> scratch(static_cast<std::size_t>(n));
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, flags);
    bwd = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, flags);
  }
  PlanPair(const PlanPair&) = delete;
  PlanPair& operator=(const PlanPair&) = delete;
  ~PlanPair() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
};

// fftw planning is not thread-safe; executing an existing plan on new arrays is.
const PlanPair& shared_plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<PlanPair>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<PlanPair>(static_cast<int>(n));
  return *slot;
}

// Plans live for the whole program, so each thread keeps its own lock-free
// index into the shared cache.
const PlanPair& plans_for(std::size_t n) {
  thread_local std::unordered_map<std::size_t, const PlanPair*> local;
  auto [it, inserted] = local.try_emplace(n, nullptr);
  if (inserted) it->second = &shared_plans_for(n);
  return *it->second;
}

}  // namespace

void forward(std::span<Complex> data) {
  if (data.empty()) return;
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_for(data.size()).fwd, buf, buf);
}

void inverse(std::span<Complex> data) {
  if (data.empty()) return;
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_for(data.size()).bwd, buf, buf);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
}

}  // namespace osfde::fft
