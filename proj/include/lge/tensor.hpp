#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "lge/util.hpp"

namespace lge {

// Dense row-major real tensor. Nothing fancy: shape + flat storage.
template <typename Real>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<Real> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), Real(0));
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rows() const { return shape.size() > 0 ? shape[0] : 0; }
    std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }

    Real& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    Real at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    Real* row(std::size_t r) { return data.data() + r * cols(); }
    const Real* row(std::size_t r) const { return data.data() + r * cols(); }

    void fill(Real v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

// One named parameter: value plus a gradient slot of identical shape.
template <typename Real>
struct Param {
    Tensor<Real> value;
    Tensor<Real> grad;
};

// Named dense parameters with gradient slots. std::map keeps iteration order
// deterministic, which the flat view and the optimizer rely on.
template <typename Real>
class ParamStore {
public:
    Tensor<Real>& add(const std::string& name, std::vector<std::size_t> shape) {
        auto [it, inserted] = params_.try_emplace(name);
        if (!inserted) throw std::invalid_argument("ParamStore::add: duplicate name " + name);
        it->second.value = Tensor<Real>(shape);
        it->second.grad = Tensor<Real>(std::move(shape));
        return it->second.value;
    }

    bool has(const std::string& name) const { return params_.count(name) != 0; }

    Tensor<Real>& value(const std::string& name) { return find(name).value; }
    const Tensor<Real>& value(const std::string& name) const { return find(name).value; }
    Tensor<Real>& grad(const std::string& name) { return find(name).grad; }
    const Tensor<Real>& grad(const std::string& name) const { return find(name).grad; }

    void zero_grad() {
        for (auto& [name, p] : params_) p.grad.fill(Real(0));
    }

    std::size_t total_numel() const {
        std::size_t n = 0;
        for (const auto& [name, p] : params_) n += p.value.numel();
        return n;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(params_.size());
        for (const auto& [name, p] : params_) out.push_back(name);
        return out;
    }

    // Flat view in name order; round-trips losslessly.
    std::vector<Real> flatten() const {
        std::vector<Real> flat;
        flat.reserve(total_numel());
        for (const auto& [name, p] : params_)
            flat.insert(flat.end(), p.value.data.begin(), p.value.data.end());
        return flat;
    }

    void unflatten(const std::vector<Real>& flat) {
        if (flat.size() != total_numel())
            throw std::invalid_argument("ParamStore::unflatten: size mismatch");
        std::size_t off = 0;
        for (auto& [name, p] : params_) {
            std::copy(flat.begin() + off, flat.begin() + off + p.value.numel(),
                      p.value.data.begin());
            off += p.value.numel();
        }
    }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    Param<Real>& find(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end())
            throw std::out_of_range("ParamStore: unknown parameter " + name);
        return it->second;
    }
    const Param<Real>& find(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end())
            throw std::out_of_range("ParamStore: unknown parameter " + name);
        return it->second;
    }

    std::map<std::string, Param<Real>> params_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction, moments shaped like their parameters.
template <typename Real>
class AdamState {
public:
    AdamState(const ParamStore<Real>& params, AdamConfig cfg) : cfg_(cfg) {
        for (const auto& [name, p] : params) {
            m_.emplace(name, Tensor<Real>(p.value.shape));
            v_.emplace(name, Tensor<Real>(p.value.shape));
        }
    }

    // Applies one update in place from the store's gradient slots.
    void step(ParamStore<Real>& params) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (auto& [name, p] : params) {
            auto mit = m_.find(name);
            if (mit == m_.end() || !mit->second.same_shape(p.value))
                throw std::invalid_argument("AdamState::step: shape mismatch for " + name);
            Tensor<Real>& m = mit->second;
            Tensor<Real>& v = v_.at(name);
            for (std::size_t i = 0; i < p.value.numel(); ++i) {
                const double g = static_cast<double>(p.grad.data[i]);
                double mi = cfg_.beta1 * static_cast<double>(m.data[i]) + (1.0 - cfg_.beta1) * g;
                double vi = cfg_.beta2 * static_cast<double>(v.data[i]) + (1.0 - cfg_.beta2) * g * g;
                m.data[i] = static_cast<Real>(mi);
                v.data[i] = static_cast<Real>(vi);
                const double mhat = mi / bc1;
                const double vhat = vi / bc2;
                p.value.data[i] -=
                    static_cast<Real>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
            }
        }
    }

    std::uint64_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    // Moment access for checkpointing.
    const std::map<std::string, Tensor<Real>>& first_moments() const { return m_; }
    const std::map<std::string, Tensor<Real>>& second_moments() const { return v_; }
    std::map<std::string, Tensor<Real>>& first_moments() { return m_; }
    std::map<std::string, Tensor<Real>>& second_moments() { return v_; }
    void set_step_count(std::uint64_t t) { t_ = t; }

private:
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::map<std::string, Tensor<Real>> m_;
    std::map<std::string, Tensor<Real>> v_;
};

}  // namespace lge
