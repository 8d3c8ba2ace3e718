#include "gvqa/nn/params.hpp"

#include <cmath>

#include "gvqa/error.hpp"
#include "gvqa/rng.hpp"

namespace gvqa::nn {

int ParamStore::add(const std::string& name, int rows, int cols, Init init) {
    require(rows > 0 && cols > 0, "ParamStore::add: bad shape for ", name);
    Entry e;
    e.name = name;
    e.offset = data_.size();
    e.rows = rows;
    e.cols = cols;
    e.init = init;
    entries_.push_back(e);
    data_.resize(data_.size() + static_cast<std::size_t>(rows) * cols, 0.0);
    return static_cast<int>(entries_.size()) - 1;
}

void ParamStore::init_values(std::uint64_t seed) {
    Rng rng(seed);
    for (const Entry& e : entries_) {
        const std::size_t n = static_cast<std::size_t>(e.rows) * e.cols;
        switch (e.init) {
        case Init::FanIn: {
            const double limit = 1.0 / std::sqrt(static_cast<double>(e.rows));
            for (std::size_t i = 0; i < n; ++i) {
                data_[e.offset + i] = rng.uniform(-limit, limit);
            }
            break;
        }
        case Init::Zero:
            for (std::size_t i = 0; i < n; ++i) {
                data_[e.offset + i] = 0.0;
            }
            break;
        case Init::One:
            for (std::size_t i = 0; i < n; ++i) {
                data_[e.offset + i] = 1.0;
            }
            break;
        }
    }
}

Mat ParamStore::matrix(int entry_index) const {
    const Entry& e = entries_[static_cast<std::size_t>(entry_index)];
    Mat m(e.rows, e.cols);
    for (std::size_t i = 0; i < m.v.size(); ++i) {
        m.v[i] = data_[e.offset + i];
    }
    return m;
}

void ParamStore::set_matrix(int entry_index, const Mat& m) {
    const Entry& e = entries_[static_cast<std::size_t>(entry_index)];
    require(m.rows == e.rows && m.cols == e.cols, "ParamStore::set_matrix: shape mismatch for ",
            e.name);
    for (std::size_t i = 0; i < m.v.size(); ++i) {
        data_[e.offset + i] = m.v[i];
    }
}

Var BoundParams::use(Tape& tape, const ParamStore& store, int entry_index) {
    Var v = tape.input(store.matrix(entry_index));
    used_.emplace_back(entry_index, v);
    return v;
}

void BoundParams::add_grads(const Tape& tape, const ParamStore& store,
                            std::vector<double>& grad) const {
    require(grad.size() == store.size(), "BoundParams::add_grads: grad buffer size mismatch");
    for (const auto& [entry_index, var] : used_) {
        const auto& e = store.entry(entry_index);
        const Mat& g = tape.grad(var);
        for (std::size_t i = 0; i < g.v.size(); ++i) {
            grad[e.offset + i] += g.v[i];
        }
    }
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
    require(params.size() == m_.size() && grad.size() == m_.size(), "Adam::step: size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

void Sgd::step(std::vector<double>& params, const std::vector<double>& grad) {
    require(params.size() == grad.size(), "Sgd::step: size mismatch");
    ++t_;
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] -= lr_ * grad[i];
    }
}

} // namespace gvqa::nn
