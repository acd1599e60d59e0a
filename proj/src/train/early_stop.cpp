#include "citekit/train/early_stop.hpp"

#include <limits>

#include "citekit/util/error.hpp"

namespace citekit::train {

EarlyStopper::EarlyStopper(std::size_t patience, double min_delta)
    : patience_(patience),
      min_delta_(min_delta),
      best_score_(-std::numeric_limits<double>::infinity()) {
  if (patience < 1) throw ValidationError("early stopping patience must be at least 1");
  if (min_delta < 0.0) throw ValidationError("early stopping min_delta must be non-negative");
}

bool EarlyStopper::observe(double score) {
  ++epochs_seen_;
  if (score > best_score_ + min_delta_ || best_epoch_ == 0) {
    best_score_ = score;
    best_epoch_ = epochs_seen_;
    return true;
  }
  return false;
}

bool EarlyStopper::should_stop() const {
  return best_epoch_ > 0 && epochs_seen_ - best_epoch_ >= patience_;
}

}  // namespace citekit::train
