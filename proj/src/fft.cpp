#include "sbl/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace sbl::fft {
namespace {

using Key = std::tuple<int, std::size_t, std::size_t, std::size_t, int>;

struct PlanCache {
  std::mutex mu;
  std::map<Key, fftw_plan> plans;

  ~PlanCache() {
    for (auto& kv : plans) fftw_destroy_plan(kv.second);
  }

  // Planning is not thread-safe in FFTW; execution with new arrays is.
  fftw_plan get(int rank, const std::size_t* n, int sign) {
    const Key key{rank, n[0], rank > 1 ? n[1] : 1, rank > 2 ? n[2] : 1, sign};
    std::lock_guard<std::mutex> lock(mu);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    int dims[3];
    std::size_t total = 1;
    for (int k = 0; k < rank; ++k) {
      dims[k] = static_cast<int>(n[k]);
      total *= n[k];
    }
    auto* buf = fftw_alloc_complex(total);
    fftw_plan p = fftw_plan_dft(rank, dims, buf, buf, sign, FFTW_ESTIMATE);
    fftw_free(buf);
    plans.emplace(key, p);
    return p;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

void run(const Grid& g, Field& f, int sign) {
  std::size_t n[3];
  for (int k = 0; k < g.dim; ++k) n[k] = g.points[k];
  fftw_plan p = cache().get(g.dim, n, sign);
  auto* data = reinterpret_cast<fftw_complex*>(f.data());
  fftw_execute_dft(p, data, data);
}

}  // namespace

void forward(const Grid& g, Field& f) { run(g, f, FFTW_FORWARD); }
void backward(const Grid& g, Field& f) { run(g, f, FFTW_BACKWARD); }

void forward_1d(std::size_t n, cplx* data) {
  fftw_plan p = cache().get(1, &n, FFTW_FORWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data), reinterpret_cast<fftw_complex*>(data));
}

void backward_1d(std::size_t n, cplx* data) {
  fftw_plan p = cache().get(1, &n, FFTW_BACKWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data), reinterpret_cast<fftw_complex*>(data));
}

}  // namespace sbl::fft
