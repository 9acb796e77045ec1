#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "aoi/rng.hpp"

namespace aoi::drl {

enum class Activation { relu, tanh };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

struct NetworkSpec {
    int input_size = 1;         // per-step observation size
    int window = 1;             // observations per input; stacked unless recurrent
    std::vector<int> hidden{64, 64};
    int outputs = 1;
    Activation activation = Activation::relu;
    bool dueling = false;
    std::vector<int> value_hidden;      // extra layers of the value head
    std::vector<int> advantage_hidden;  // extra layers of the advantage head
    int recurrent_size = 0;             // > 0 runs a GRU over the window before the dense layers

    void validate() const;
    bool recurrent() const { return recurrent_size > 0; }
    // Rows of the input matrix: input_size * window.
    int input_rows() const { return input_size * window; }
};

// Q_a = V + A_a - mean(A).
Eigen::VectorXd dueling_combine(double value, const Eigen::VectorXd& advantage);

// Fully connected network over a flat parameter vector. Inputs are column
// batches; observations of a window are stacked oldest first.
class Network {
public:
    struct Dense {
        int in = 0;
        int out = 0;
        Eigen::Index w = 0;  // offset of the out x in weight block (column major)
        Eigen::Index b = 0;
        bool activated = true;
    };

    struct Cache {
        std::vector<Eigen::MatrixXd> gru_x, gru_h, gru_z, gru_r, gru_n;
        std::vector<Eigen::MatrixXd> trunk, value, advantage;  // layer inputs then final output
        Eigen::MatrixXd trunk_out;
    };

    Network() = default;
    explicit Network(NetworkSpec spec);

    const NetworkSpec& spec() const { return spec_; }
    Eigen::Index parameter_count() const { return params_.size(); }
    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer.
    void initialize(Rng& rng);

    // `h0` is the GRU state before the first window step; empty means zeros.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h0 = {}) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h0, Cache& cache) const;
    // Gradient of sum(d_out .* Q) with respect to the parameters.
    Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& d_out) const;
    // Same, written into `grad` (resized and overwritten).
    void backward(const Cache& cache, const Eigen::MatrixXd& d_out, Eigen::VectorXd& grad) const;

    // One GRU step from `h` on a single observation; used to carry state across an episode.
    Eigen::VectorXd recurrent_step(const Eigen::VectorXd& h, const Eigen::VectorXd& obs) const;

    // Flat parameter layout, exposed for tests.
    const std::vector<Dense>& trunk_layers() const { return trunk_; }

private:
    struct Gru {
        int in = 0;
        int size = 0;
        Eigen::Index wz = 0, wr = 0, wn = 0, uz = 0, ur = 0, un = 0, bz = 0, br = 0, bn = 0;
    };

    Dense add_dense(int in, int out, bool activated);
    Eigen::MatrixXd run_mlp(const std::vector<Dense>& layers, const Eigen::MatrixXd& x,
                            std::vector<Eigen::MatrixXd>* cache) const;
    Eigen::MatrixXd back_mlp(const std::vector<Dense>& layers, const std::vector<Eigen::MatrixXd>& cache,
                             Eigen::MatrixXd d, Eigen::VectorXd& grad) const;
    Eigen::MatrixXd gru_forward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h0, Cache* cache) const;
    void gru_backward(const Cache& cache, Eigen::MatrixXd dh, Eigen::VectorXd& grad) const;

    NetworkSpec spec_;
    Gru gru_;
    std::vector<Dense> trunk_, value_, advantage_;
    Eigen::VectorXd params_;
    Eigen::Index offset_ = 0;
};

// Target parameters move toward the online ones: target = psi * online + (1 - psi) * target.
void soft_update(Eigen::VectorXd& target, const Eigen::VectorXd& online, double psi);

// Relative error |g_bp - g_fd| / max(|g_bp|, |g_fd|) for the scalar sum(weights .* Q),
// using central differences with the given step.
double gradient_check(const Network& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& weights,
                      double step = 1e-5, const Eigen::MatrixXd& h0 = {});

}  // namespace aoi::drl
