#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvqa/nn/tape.hpp"

namespace gvqa::nn {

enum class Init { FanIn, Zero, One };

// Flat parameter vector with named matrix views. The flat layout is what the
// checkpoint format, the EMA copy and the optimizers operate on.
class ParamStore {
public:
    struct Entry {
        std::string name;
        std::size_t offset{0};
        int rows{0};
        int cols{0};
        Init init{Init::FanIn};
    };

    // Returns the entry index. Registration order defines the flat layout.
    int add(const std::string& name, int rows, int cols, Init init = Init::FanIn);

    void init_values(std::uint64_t seed);

    [[nodiscard]] Mat matrix(int entry_index) const;
    void set_matrix(int entry_index, const Mat& m);

    [[nodiscard]] const Entry& entry(int entry_index) const { return entries_[entry_index]; }
    [[nodiscard]] int entry_count() const { return static_cast<int>(entries_.size()); }
    [[nodiscard]] std::size_t size() const { return data_.size(); }

    std::vector<double>& data() { return data_; }
    [[nodiscard]] const std::vector<double>& data() const { return data_; }

private:
    std::vector<Entry> entries_;
    std::vector<double> data_;
};

// Per-forward bookkeeping: binds parameter slices to tape vars so gradients
// can be read back into a flat buffer after backward().
class BoundParams {
public:
    Var use(Tape& tape, const ParamStore& store, int entry_index);
    void add_grads(const Tape& tape, const ParamStore& store, std::vector<double>& grad) const;

private:
    std::vector<std::pair<int, Var>> used_;
};

class Adam {
public:
    Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(std::vector<double>& params, const std::vector<double>& grad);
    [[nodiscard]] std::uint64_t steps() const { return t_; }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    std::uint64_t t_{0};
    std::vector<double> m_;
    std::vector<double> v_;
};

class Sgd {
public:
    explicit Sgd(double lr) : lr_(lr) {}

    void step(std::vector<double>& params, const std::vector<double>& grad);
    [[nodiscard]] std::uint64_t steps() const { return t_; }

private:
    double lr_;
    std::uint64_t t_{0};
};

} // namespace gvqa::nn
