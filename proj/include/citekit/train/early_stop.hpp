#ifndef CITEKIT_TRAIN_EARLY_STOP_HPP
#define CITEKIT_TRAIN_EARLY_STOP_HPP

#include <cstddef>

namespace citekit::train {

// Patience-based stopping on a maximized validation score. An epoch counts as
// an improvement only when it beats the best score by more than min_delta;
// stopping triggers once `patience` epochs pass without one.
class EarlyStopper {
 public:
  EarlyStopper(std::size_t patience, double min_delta);

  // Returns true when `score` is a new best. Call once per epoch, in order.
  bool observe(double score);

  bool should_stop() const;
  std::size_t best_epoch() const { return best_epoch_; }  // 1-based
  double best_score() const { return best_score_; }
  std::size_t epochs_seen() const { return epochs_seen_; }

 private:
  std::size_t patience_;
  double min_delta_;
  std::size_t epochs_seen_ = 0;
  std::size_t best_epoch_ = 0;
  double best_score_;
};

}  // namespace citekit::train

#endif
