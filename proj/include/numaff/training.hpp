#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "numaff/dataset.hpp"
#include "numaff/rng.hpp"
#include "numaff/siamese.hpp"

namespace numaff {

enum class Precision { f32, f64 };

struct TrainConfig {
    std::size_t epochs_max = 20;
    std::size_t batch_size = 32;
    std::size_t pairs_per_epoch = 1024;
    /// Training stops once held-out accuracy lands inside [lo, hi].
    double accuracy_lo = 0.75;
    double accuracy_hi = 0.85;
    double lr = 1e-4;
    std::uint64_t seed = 0;
    Precision precision = Precision::f32;
};

/// Throws Errc::invalid_argument unless 0 <= lo <= hi <= 1 and counts are positive.
void validate_train_config(const TrainConfig& config);

struct ImageRef {
    int digit;
    std::size_t index;
};

struct LabeledPair {
    ImageRef a;
    ImageRef b;
    int label; ///< 1 = same digit
};

/// Even positions are same-digit pairs, odd positions different-digit pairs;
/// classes and images are drawn uniformly with replacement from non-empty
/// classes. Needs at least two non-empty classes.
std::vector<LabeledPair> sample_training_pairs(const Dataset& dataset, std::size_t count, Rng& rng);

struct EpochRecord {
    std::size_t epoch;       ///< 1-based
    double loss;             ///< mean training BCE over the epoch
    double holdout_loss;     ///< mean BCE on the held-out pairs after the epoch
    double holdout_accuracy; ///< fraction of held-out pairs with (p >= 0.5) == label
};

struct TrainResult {
    SiameseModel model;
    std::vector<EpochRecord> trace;
    double initial_holdout_loss = 0.0;
    double initial_holdout_accuracy = 0.0;
    std::size_t holdout_pairs = 0;
};

/// Held-out pair count for a given epoch size: about a tenth of all pairs
/// generated per epoch, rounded up to an even count, at least 2.
std::size_t holdout_size(std::size_t pairs_per_epoch);

/// Minibatch Adam on BCE. Throws Errc::divergence (message carries the
/// epoch) if the loss or any parameter stops being finite.
TrainResult train(const SiameseModel& model, const Dataset& dataset, const TrainConfig& config);

/// "epoch,loss,holdout_accuracy" header plus one row per epoch.
std::string trace_csv(const std::vector<EpochRecord>& trace);

} // namespace numaff
