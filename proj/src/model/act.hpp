#pragma once

#include <vector>

namespace mf {

// Halting distribution of one position: p over the executed updates, the
// remainder assigned to the last one, and the update count.
struct HaltingSchedule {
  std::vector<double> p;
  int n_updates = 0;
  double remainder = 0.0;
};

// The halting law. Given per-update sigmoid outputs h^1, h^2, ... (each in
// (0,1)), the number of updates is the first n' where the running sum of h
// reaches 1-epsilon, capped at max_updates (and at the length of h). The
// remainder 1 - sum_{n<N} h^n becomes the final probability; earlier entries
// keep their h. The returned p always sums to 1 by construction.
HaltingSchedule halting_probabilities(const std::vector<double>& h,
                                      double epsilon, int max_updates);

// Per-position halting bookkeeping of one ACT forward pass.
struct ACTPositionState {
  std::vector<double> halt_probs;
  double remainder = 0.0;
  int n_updates = 0;
};

struct ACTState {
  int batch = 0;
  int seq_len = 0;
  std::vector<ACTPositionState> positions;  // batch-major, size batch*seq_len

  const ACTPositionState& at(int b, int t) const {
    return positions[static_cast<std::size_t>(b) * seq_len + t];
  }
};

}  // namespace mf
