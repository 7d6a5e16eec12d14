// SPDX-License-Identifier: Apache-2.0
#include "codesign/accuracy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "codesign/autodiff.hpp"
#include "codesign/perf_model.hpp"
#include "codesign/rng.hpp"

namespace codesign {

Verdict validate_surrogate(const SurrogateParams& p, const SearchSpace& space) {
    if (!(p.capacity_weight >= 0.0) || !(p.depth_weight >= 0.0)) return Verdict::fail("surrogate weights must be >= 0");
    if (!(p.floor > 0.0)) return Verdict::fail("surrogate floor must be > 0");
    for (int q : space.quant_bits) {
        if (!p.quant_penalty.contains(q)) return Verdict::fail("surrogate quant_penalty has no entry for " + std::to_string(q) + "-bit");
    }
    double prev = INFINITY;
    for (const auto& [bits, pen] : p.quant_penalty) {
        if (!(pen >= 0.0)) return Verdict::fail("surrogate quant_penalty entries must be >= 0");
        if (pen > prev) return Verdict::fail("surrogate quant_penalty must be non-increasing in bitwidth");
        prev = pen;
    }
    return Verdict::ok();
}

ArchDescriptors describe(const SearchSpace& space, const DesignPoint& point, const SurrogateParams& params) {
    const Bundle& bundle = space.bundle(point.bundle_id);
    const auto slot_shapes = shapes(space, point);
    ArchDescriptors d;
    double weights = 0.0;
    double penalty = 0.0;
    for (std::size_t i = 0; i < slot_shapes.size(); ++i) {
        const OpCandidate& op = bundle.ops[static_cast<std::size_t>(point.op_choice[i])];
        weights += static_cast<double>(op_weight_count(op, slot_shapes[i]));
        if (!op.zero_mac()) {
            d.effective_depth += 1.0;
            penalty += params.quant_penalty.at(point.quant_bits[i]);
        }
    }
    d.log_param_count = std::log1p(weights);
    d.quant_penalty = slot_shapes.empty() ? 0.0 : penalty / static_cast<double>(slot_shapes.size());
    return d;
}

double surrogate_acc_loss(const SurrogateParams& p, const ArchDescriptors& d) {
    return surrogate_acc_loss(p, d.log_param_count, d.effective_depth, d.quant_penalty);
}

double SurrogateEvaluator::acc_loss(const SearchSpace& space, const DesignPoint& point, std::uint64_t) const {
    return surrogate_acc_loss(params_, describe(space, point, params_));
}

double SurrogateEvaluator::accuracy(const SearchSpace& space, const DesignPoint& point, std::uint64_t seed) const {
    return std::clamp(1.0 + params_.floor - acc_loss(space, point, seed), 0.0, 1.0);
}

double ProxyEvaluator::accuracy(const SearchSpace& space, const DesignPoint& point, std::uint64_t seed) const {
    return proxy_train_eval(space, point, dataset_, cfg_.epochs, seed, cfg_).val_accuracy;
}

double ProxyEvaluator::acc_loss(const SearchSpace& space, const DesignPoint& point, std::uint64_t seed) const {
    return floor_ + (1.0 - accuracy(space, point, seed));
}

Assessment ProxyEvaluator::assess(const SearchSpace& space, const DesignPoint& point, std::uint64_t seed) const {
    const double acc = accuracy(space, point, seed);
    return {acc, floor_ + (1.0 - acc)};
}

// ---------------------------------------------------------------------------
// datasets

int ProxyDataset::num_classes() const {
    return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

void split_dataset(ProxyDataset& ds, std::uint64_t seed, double train_fraction) {
    std::vector<std::size_t> order(ds.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(seed, "dataset_split");
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(order.size())));
    ds.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    ds.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(ds.train.begin(), ds.train.end());
    std::sort(ds.val.begin(), ds.val.end());
    ds.seed = seed;
}

ProxyDataset make_blobs(std::uint64_t seed, int classes, int per_class, std::size_t dim, double center_box, double spread) {
    if (classes < 2) throw std::invalid_argument("make_blobs: need at least 2 classes");
    ProxyDataset ds;
    ds.dim = dim;
    Rng rng = make_rng(seed, "blobs");
    std::vector<double> centers(static_cast<std::size_t>(classes) * dim);
    for (double& c : centers) c = (2.0 * uniform01(rng) - 1.0) * center_box;
    // Box-Muller so the stream does not depend on the standard library's normal_distribution
    auto normal = [&rng]() {
        const double u1 = uniform_open01(rng);
        const double u2 = uniform01(rng);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    };
    for (int k = 0; k < classes; ++k) {
        for (int i = 0; i < per_class; ++i) {
            for (std::size_t j = 0; j < dim; ++j)
                ds.features.push_back(centers[static_cast<std::size_t>(k) * dim + j] + spread * normal());
            ds.labels.push_back(k);
        }
    }
    split_dataset(ds, seed);
    return ds;
}

ProxyDataset load_dataset_csv(const std::filesystem::path& path, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header row");
    const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') + 1);
    if (columns < 2) throw std::runtime_error(path.string() + ": need at least one feature and a label column");
    ProxyDataset ds;
    ds.dim = columns - 1;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(row, cell, ',')) {
            try {
                if (col < ds.dim) {
                    ds.features.push_back(std::stod(cell));
                } else {
                    ds.labels.push_back(std::stoi(cell));
                }
            } catch (const std::exception&) {
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad value '" + cell + "'");
            }
            ++col;
        }
        if (col != columns) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) + " columns");
    }
    if (ds.num_classes() < 2) throw std::runtime_error(path.string() + ": dataset needs at least 2 classes");
    split_dataset(ds, seed);
    return ds;
}

void write_dataset_csv(std::ostream& os, const ProxyDataset& ds) {
    for (std::size_t j = 0; j < ds.dim; ++j) os << 'x' << j << ',';
    os << "label\n";
    os.precision(17);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        for (std::size_t j = 0; j < ds.dim; ++j) os << ds.row(r)[j] << ',';
        os << ds.labels[r] << '\n';
    }
}

// ---------------------------------------------------------------------------
// proxy MLP

namespace {

struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> w;  // out x in
    std::vector<double> b;
};

template <class S>
S tanh_of(const S& x) {
    using std::exp;
    return 2.0 / (exp(x * -2.0) + 1.0) - 1.0;
}

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> inv_std;
};

Standardizer fit_standardizer(const ProxyDataset& ds) {
    Standardizer s;
    s.mean.assign(ds.dim, 0.0);
    s.inv_std.assign(ds.dim, 1.0);
    for (std::size_t r : ds.train)
        for (std::size_t j = 0; j < ds.dim; ++j) s.mean[j] += ds.row(r)[j];
    for (double& m : s.mean) m /= static_cast<double>(ds.train.size());
    std::vector<double> var(ds.dim, 0.0);
    for (std::size_t r : ds.train)
        for (std::size_t j = 0; j < ds.dim; ++j) var[j] += std::pow(ds.row(r)[j] - s.mean[j], 2);
    for (std::size_t j = 0; j < ds.dim; ++j) {
        const double sd = std::sqrt(var[j] / static_cast<double>(ds.train.size()));
        s.inv_std[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
    return s;
}

int predict(const std::vector<Layer>& net, std::vector<double> x) {
    for (std::size_t l = 0; l < net.size(); ++l) {
        const Layer& L = net[l];
        std::vector<double> y(L.out);
        for (std::size_t o = 0; o < L.out; ++o) {
            double acc = L.b[o];
            for (std::size_t i = 0; i < L.in; ++i) acc += L.w[o * L.in + i] * x[i];
            y[o] = l + 1 < net.size() ? tanh_of(acc) : acc;
        }
        x = std::move(y);
    }
    return static_cast<int>(std::max_element(x.begin(), x.end()) - x.begin());
}

}  // namespace

ProxyResult proxy_train_eval(const SearchSpace& space, const DesignPoint& point, const ProxyDataset& ds, int epochs,
                             std::uint64_t seed, const ProxyConfig& cfg) {
    if (epochs < 1) throw std::invalid_argument("proxy_train_eval: epochs must be >= 1");
    if (ds.num_classes() < 2) throw std::invalid_argument("proxy_train_eval: dataset has a single class");
    if (ds.train.empty() || ds.val.empty()) throw std::invalid_argument("proxy_train_eval: empty train or validation split");
    if (auto v = validate(space, point); !v) throw std::invalid_argument("proxy_train_eval: " + v.reason);

    const int classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    std::vector<std::size_t> widths{ds.dim};
    for (int i = 0; i < point.replications; ++i) {
        const int w = static_cast<int>(std::lround(point.channels[static_cast<std::size_t>(i)] * cfg.width_scale));
        widths.push_back(static_cast<std::size_t>(std::max(cfg.min_width, w)));
    }
    widths.push_back(static_cast<std::size_t>(classes));

    Rng rng = make_rng(seed, "proxy_init");
    std::vector<Layer> net;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer L{widths[l], widths[l + 1], {}, {}};
        const double bound = std::sqrt(6.0 / static_cast<double>(L.in + L.out));
        L.w.resize(L.in * L.out);
        for (double& w : L.w) w = (2.0 * uniform01(rng) - 1.0) * bound;
        L.b.assign(L.out, 0.0);
        net.push_back(std::move(L));
    }

    const Standardizer sc = fit_standardizer(ds);
    auto standardized = [&](std::size_t r) {
        std::vector<double> x(ds.dim);
        for (std::size_t j = 0; j < ds.dim; ++j) x[j] = (ds.row(r)[j] - sc.mean[j]) * sc.inv_std[j];
        return x;
    };
    std::vector<std::vector<double>> train_x;
    for (std::size_t r : ds.train) train_x.push_back(standardized(r));

    ProxyResult result;
    ad::Tape tape;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        tape.clear();
        std::vector<std::vector<ad::Var>> wv(net.size());
        std::vector<std::vector<ad::Var>> bv(net.size());
        for (std::size_t l = 0; l < net.size(); ++l) {
            for (std::size_t k = 0; k < net[l].w.size(); ++k)
                wv[l].push_back(tape.variable(net[l].w[k], "w" + std::to_string(l) + "_" + std::to_string(k)));
            for (std::size_t k = 0; k < net[l].b.size(); ++k)
                bv[l].push_back(tape.variable(net[l].b[k], "b" + std::to_string(l) + "_" + std::to_string(k)));
        }
        ad::Var total = tape.constant(0.0);
        for (std::size_t s = 0; s < train_x.size(); ++s) {
            std::vector<ad::Var> x;
            for (double v : train_x[s]) x.push_back(tape.constant(v));
            for (std::size_t l = 0; l < net.size(); ++l) {
                const Layer& L = net[l];
                std::vector<ad::Var> y;
                y.reserve(L.out);
                for (std::size_t o = 0; o < L.out; ++o) {
                    ad::Var acc = bv[l][o];
                    for (std::size_t i = 0; i < L.in; ++i) acc = acc + wv[l][o * L.in + i] * x[i];
                    y.push_back(l + 1 < net.size() ? tanh_of(acc) : acc);
                }
                x = std::move(y);
            }
            // cross-entropy: logsumexp(z) - z_label
            ad::Var lse = x[0];
            for (std::size_t k = 1; k < x.size(); ++k) lse = ad::logsumexp(lse, x[k]);
            total = total + (lse - x[static_cast<std::size_t>(ds.labels[ds.train[s]])]);
        }
        const ad::Var loss = total / static_cast<double>(train_x.size());
        result.train_loss.push_back(loss.value());
        const std::vector<double> adj = tape.adjoints(loss);
        for (std::size_t l = 0; l < net.size(); ++l) {
            for (std::size_t k = 0; k < net[l].w.size(); ++k) {
                const double g = adj[static_cast<std::size_t>(wv[l][k].id)];
                if (!std::isfinite(g)) throw std::domain_error("proxy_train_eval: non-finite gradient");
                net[l].w[k] -= cfg.lr * g;
            }
            for (std::size_t k = 0; k < net[l].b.size(); ++k) net[l].b[k] -= cfg.lr * adj[static_cast<std::size_t>(bv[l][k].id)];
        }
    }

    std::size_t correct = 0;
    for (std::size_t r : ds.val) correct += predict(net, standardized(r)) == ds.labels[r] ? 1 : 0;
    result.val_accuracy = static_cast<double>(correct) / static_cast<double>(ds.val.size());
    return result;
}

}  // namespace codesign
