// SPDX-License-Identifier: Apache-2.0
//
// Accuracy evaluators. The surrogate is a closed-form, differentiable
// stand-in; the proxy trains a small MLP whose widths follow the point's
// channel counts and whose depth follows its replications.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "codesign/space.hpp"

namespace codesign {

struct SurrogateParams {
    double capacity_weight = 0.15;  // a
    double depth_weight = 0.05;     // b
    std::map<int, double> quant_penalty{{4, 0.25}, {8, 0.05}, {16, 0.0}};
    double floor = 0.05;  // epsilon
};

Verdict validate_surrogate(const SurrogateParams& params, const SearchSpace& space);

struct ArchDescriptors {
    double log_param_count = 0.0;  // log(1 + weight count)
    double effective_depth = 0.0;  // slots whose op does work
    double quant_penalty = 0.0;    // mean penalty over the active slots
};

ArchDescriptors describe(const SearchSpace& space, const DesignPoint& point, const SurrogateParams& params);

// eps + exp(-a * log_param_count - b * effective_depth + quant_penalty)
template <class S>
S surrogate_acc_loss(const SurrogateParams& p, const S& log_param_count, const S& effective_depth, const S& quant_penalty) {
    using std::exp;
    return exp(log_param_count * -p.capacity_weight + effective_depth * -p.depth_weight + quant_penalty) + p.floor;
}

double surrogate_acc_loss(const SurrogateParams& p, const ArchDescriptors& d);

// Tabular classification data: row-major features, integer labels.
struct ProxyDataset {
    std::size_t dim = 0;
    std::vector<double> features;
    std::vector<int> labels;
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::uint64_t seed = 0;

    std::size_t rows() const { return labels.size(); }
    int num_classes() const;
    const double* row(std::size_t r) const { return features.data() + r * dim; }
};

// Gaussian blobs around seeded centers; split 75/25 by a seeded shuffle.
ProxyDataset make_blobs(std::uint64_t seed, int classes, int per_class, std::size_t dim, double center_box = 5.0,
                        double spread = 1.0);
void split_dataset(ProxyDataset& ds, std::uint64_t seed, double train_fraction = 0.75);
// Header row; last column is the integer label. The split is rebuilt from `seed`.
ProxyDataset load_dataset_csv(const std::filesystem::path& path, std::uint64_t seed);
void write_dataset_csv(std::ostream& os, const ProxyDataset& ds);

struct ProxyConfig {
    double width_scale = 0.5;
    int min_width = 2;
    double lr = 0.5;
    int epochs = 30;
};

struct ProxyResult {
    double val_accuracy = 0.0;
    std::vector<double> train_loss;  // mean cross-entropy before each update
};

ProxyResult proxy_train_eval(const SearchSpace& space, const DesignPoint& point, const ProxyDataset& dataset, int epochs,
                             std::uint64_t seed, const ProxyConfig& cfg = {});

struct Assessment {
    double accuracy = 0.0;
    double acc_loss = 0.0;
};

class AccuracyEvaluator {
public:
    virtual ~AccuracyEvaluator() = default;
    // Both views at once; evaluators that train override it to train once.
    virtual Assessment assess(const SearchSpace& space, const DesignPoint& point, std::uint64_t seed) const {
        return {accuracy(space, point, seed), acc_loss(space, point, seed)};
    }
    // in [0, 1]
    virtual double accuracy(const SearchSpace& space, const DesignPoint& point, std::uint64_t seed) const = 0;
    // strictly positive
    virtual double acc_loss(const SearchSpace& space, const DesignPoint& point, std::uint64_t seed) const = 0;
    virtual bool differentiable() const = 0;
    virtual std::string name() const = 0;
};

class SurrogateEvaluator final : public AccuracyEvaluator {
public:
    explicit SurrogateEvaluator(SurrogateParams params) : params_(std::move(params)) {}
    double accuracy(const SearchSpace& space, const DesignPoint& point, std::uint64_t seed) const override;
    double acc_loss(const SearchSpace& space, const DesignPoint& point, std::uint64_t seed) const override;
    bool differentiable() const override { return true; }
    std::string name() const override { return "surrogate"; }
    const SurrogateParams& params() const { return params_; }

private:
    SurrogateParams params_;
};

class ProxyEvaluator final : public AccuracyEvaluator {
public:
    ProxyEvaluator(ProxyDataset dataset, ProxyConfig cfg, double floor = 0.05)
        : dataset_(std::move(dataset)), cfg_(cfg), floor_(floor) {}
    double accuracy(const SearchSpace& space, const DesignPoint& point, std::uint64_t seed) const override;
    // floor + (1 - accuracy)
    double acc_loss(const SearchSpace& space, const DesignPoint& point, std::uint64_t seed) const override;
    Assessment assess(const SearchSpace& space, const DesignPoint& point, std::uint64_t seed) const override;
    bool differentiable() const override { return false; }
    std::string name() const override { return "proxy"; }

private:
    ProxyDataset dataset_;
    ProxyConfig cfg_;
    double floor_;
};

}  // namespace codesign
