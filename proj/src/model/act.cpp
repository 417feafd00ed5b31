#include "model/act.hpp"

#include "core/error.hpp"

namespace mf {

HaltingSchedule halting_probabilities(const std::vector<double>& h,
                                      double epsilon, int max_updates) {
  if (h.empty()) throw ContractError("halting_probabilities: empty h sequence");
  if (max_updates < 1) throw ContractError("halting_probabilities: max_updates < 1");
  for (double v : h)
    if (!(v > 0.0 && v < 1.0))
      throw ContractError("halting_probabilities: h outside (0, 1)");

  const int cap = std::min<int>(max_updates, static_cast<int>(h.size()));
  const double threshold = 1.0 - epsilon;
  int n = cap;
  double running = 0.0;
  for (int i = 0; i < cap; ++i) {
    running += h[static_cast<std::size_t>(i)];
    if (running >= threshold) {
      n = i + 1;
      break;
    }
  }

  HaltingSchedule out;
  out.n_updates = n;
  double before_last = 0.0;
  for (int i = 0; i + 1 < n; ++i) before_last += h[static_cast<std::size_t>(i)];
  out.remainder = 1.0 - before_last;
  out.p.assign(h.begin(), h.begin() + n);
  out.p[static_cast<std::size_t>(n - 1)] = out.remainder;
  return out;
}

}  // namespace mf
