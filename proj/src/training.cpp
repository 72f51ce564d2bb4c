#include "numaff/training.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "numaff/layers.hpp"

namespace numaff {

void validate_train_config(const TrainConfig& c) {
    if (!(c.accuracy_lo >= 0.0 && c.accuracy_lo <= c.accuracy_hi && c.accuracy_hi <= 1.0))
        throw Error(Errc::invalid_argument, "train: accuracy window must satisfy 0 <= lo <= hi <= 1");
    if (c.batch_size == 0 || c.pairs_per_epoch == 0)
        throw Error(Errc::invalid_argument, "train: batch_size and pairs_per_epoch must be positive");
    if (!(c.lr > 0.0) || !std::isfinite(c.lr)) throw Error(Errc::invalid_argument, "train: lr must be positive");
}

std::vector<LabeledPair> sample_training_pairs(const Dataset& dataset, std::size_t count, Rng& rng) {
    std::vector<int> nonempty;
    for (int d = 0; d < kDigitClasses; ++d)
        if (!dataset.classes[d].empty()) nonempty.push_back(d);
    if (nonempty.size() < 2)
        throw Error(Errc::empty_class, "dataset '" + dataset.name +
                                           "' needs images in at least two digit classes to form pairs");

    auto pick = [&](int digit) {
        return ImageRef{digit, rng.index(dataset.classes[digit].size())};
    };
    std::vector<LabeledPair> pairs;
    pairs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (i % 2 == 0) {
            const int d = nonempty[rng.index(nonempty.size())];
            const ImageRef a = pick(d);
            pairs.push_back({a, pick(d), 1});
        } else {
            const std::size_t ia = rng.index(nonempty.size());
            std::size_t ib = rng.index(nonempty.size() - 1);
            if (ib >= ia) ++ib;
            const ImageRef a = pick(nonempty[ia]);
            pairs.push_back({a, pick(nonempty[ib]), 0});
        }
    }
    return pairs;
}

std::size_t holdout_size(std::size_t pairs_per_epoch) {
    std::size_t n = (pairs_per_epoch + 8) / 9;
    n += n % 2;
    return std::max<std::size_t>(n, 2);
}

namespace {

template <typename T>
struct Trainer {
    BasicSiameseModel<T> model;
    const TrainConfig& config;
    std::array<std::vector<BasicTensor<T>>, kDigitClasses> images;
    std::vector<AdamState<T>> adam;

    Trainer(BasicSiameseModel<T> m, const Dataset& ds, const TrainConfig& c)
        : model(std::move(m)), config(c) {
        for (int d = 0; d < kDigitClasses; ++d)
            for (const auto& s : ds.classes[d]) images[d].push_back(image_tensor<T>(s.image));
        AdamConfig ac;
        ac.lr = c.lr;
        for (const auto& p : model.params) adam.emplace_back(p.shape(), ac);
    }

    const BasicTensor<T>& image(const ImageRef& r) const { return images[r.digit][r.index]; }

    struct Eval {
        double loss;
        double accuracy;
    };

    Eval evaluate(const std::vector<LabeledPair>& pairs) const {
        double loss = 0.0;
        std::size_t correct = 0;
        for (const auto& p : pairs) {
            const double prob = forward_pair(model, image(p.a), image(p.b));
            loss += bce_loss(prob, p.label).value;
            correct += ((prob >= 0.5) == (p.label == 1)) ? 1 : 0;
        }
        const double n = static_cast<double>(pairs.size());
        return {loss / n, static_cast<double>(correct) / n};
    }

    // One epoch of minibatch updates; returns the mean pre-update pair loss.
    double run_epoch(const std::vector<LabeledPair>& pairs) {
        double total = 0.0;
        auto grads = zero_grads(model);
        for (std::size_t start = 0; start < pairs.size(); start += config.batch_size) {
            const std::size_t end = std::min(pairs.size(), start + config.batch_size);
            for (auto& g : grads) g.fill(T{0});
            for (std::size_t i = start; i < end; ++i) {
                PairTrace<T> trace;
                const T prob = forward_pair(model, image(pairs[i].a), image(pairs[i].b), &trace);
                const LossValue lv = bce_loss(prob, pairs[i].label);
                total += lv.value;
                backward_pair(model, trace, static_cast<T>(lv.gradient_wrt_prediction), grads);
            }
            const T inv = T{1} / static_cast<T>(end - start);
            for (std::size_t k = 0; k < grads.size(); ++k) {
                for (T& v : grads[k].data()) v *= inv;
                adam_update(model.params[k], grads[k], adam[k]);
            }
        }
        return total / static_cast<double>(pairs.size());
    }
};

template <typename T>
TrainResult train_impl(const SiameseModel& initial, const Dataset& dataset, const TrainConfig& config) {
    TrainResult result;
    result.model = initial;
    if (config.epochs_max == 0) return result;

    Rng holdout_rng(splitmix64(config.seed ^ 0x686f6c646f7574ULL));
    Rng pair_rng(splitmix64(config.seed ^ 0x747261696eULL));
    const auto holdout = sample_training_pairs(dataset, holdout_size(config.pairs_per_epoch), holdout_rng);
    result.holdout_pairs = holdout.size();

    Trainer<T> trainer(initial.cast<T>(), dataset, config);
    const auto initial_eval = trainer.evaluate(holdout);
    result.initial_holdout_loss = initial_eval.loss;
    result.initial_holdout_accuracy = initial_eval.accuracy;

    for (std::size_t epoch = 1; epoch <= config.epochs_max; ++epoch) {
        const auto pairs = sample_training_pairs(dataset, config.pairs_per_epoch, pair_rng);
        double loss = 0.0;
        try {
            loss = trainer.run_epoch(pairs);
        } catch (const Error& e) {
            if (e.code() != Errc::non_finite) throw;
            loss = std::numeric_limits<double>::quiet_NaN();
        }
        bool finite = std::isfinite(loss);
        for (const auto& p : trainer.model.params) finite = finite && p.all_finite();
        if (!finite)
            throw Error(Errc::divergence, "training diverged (non-finite loss or parameters) in epoch " +
                                              std::to_string(epoch));
        const auto eval = trainer.evaluate(holdout);
        result.trace.push_back({epoch, loss, eval.loss, eval.accuracy});
        if (eval.accuracy >= config.accuracy_lo && eval.accuracy <= config.accuracy_hi) break;
    }
    result.model = trainer.model.template cast<float>();
    return result;
}

} // namespace

TrainResult train(const SiameseModel& model, const Dataset& dataset, const TrainConfig& config) {
    validate_train_config(config);
    validate_model(model);
    if (config.precision == Precision::f64) return train_impl<double>(model, dataset, config);
    return train_impl<float>(model, dataset, config);
}

std::string trace_csv(const std::vector<EpochRecord>& trace) {
    std::string out = "epoch,loss,holdout_accuracy\n";
    char line[96];
    for (const auto& r : trace) {
        std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", r.epoch, r.loss, r.holdout_accuracy);
        out += line;
    }
    return out;
}

} // namespace numaff
