#include "aoi/drl/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace aoi::drl {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using CMap = Eigen::Map<const MatrixXd>;
using Map = Eigen::Map<MatrixXd>;

MatrixXd sigmoid(const MatrixXd& z) {
    return (1.0 + (-z.array()).exp()).inverse().matrix();
}

}  // namespace

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw std::invalid_argument("unknown activation '" + std::string(name) + "' (expected relu or tanh)");
}

std::string_view to_string(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

void NetworkSpec::validate() const {
    if (input_size < 1) throw std::invalid_argument("network input_size must be >= 1");
    if (window < 1) throw std::invalid_argument("network window must be >= 1");
    if (outputs < 1) throw std::invalid_argument("network outputs must be >= 1");
    if (recurrent_size < 0) throw std::invalid_argument("network recurrent_size must be >= 0");
    for (const auto* v : {&hidden, &value_hidden, &advantage_hidden})
        for (int w : *v)
            if (w < 1) throw std::invalid_argument("layer widths must be >= 1");
}

VectorXd dueling_combine(double value, const VectorXd& advantage) {
    if (advantage.size() == 0) throw std::invalid_argument("advantage vector must be nonempty");
    return (advantage.array() - advantage.mean() + value).matrix();
}

Network::Dense Network::add_dense(int in, int out, bool activated) {
    Dense d;
    d.in = in;
    d.out = out;
    d.activated = activated;
    d.w = offset_;
    offset_ += static_cast<Eigen::Index>(in) * out;
    d.b = offset_;
    offset_ += out;
    return d;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    int prev = spec_.input_rows();
    if (spec_.recurrent()) {
        const Eigen::Index I = spec_.input_size;
        const Eigen::Index H = spec_.recurrent_size;
        gru_.in = spec_.input_size;
        gru_.size = spec_.recurrent_size;
        gru_.wz = offset_;
        gru_.wr = gru_.wz + H * I;
        gru_.wn = gru_.wr + H * I;
        gru_.uz = gru_.wn + H * I;
        gru_.ur = gru_.uz + H * H;
        gru_.un = gru_.ur + H * H;
        gru_.bz = gru_.un + H * H;
        gru_.br = gru_.bz + H;
        gru_.bn = gru_.br + H;
        offset_ = gru_.bn + H;
        prev = spec_.recurrent_size;
    }
    for (int h : spec_.hidden) {
        trunk_.push_back(add_dense(prev, h, true));
        prev = h;
    }
    if (spec_.dueling) {
        int v = prev;
        for (int h : spec_.value_hidden) {
            value_.push_back(add_dense(v, h, true));
            v = h;
        }
        value_.push_back(add_dense(v, 1, false));
    }
    int a = prev;
    if (spec_.dueling) {
        for (int h : spec_.advantage_hidden) {
            advantage_.push_back(add_dense(a, h, true));
            a = h;
        }
    }
    advantage_.push_back(add_dense(a, spec_.outputs, false));
    params_ = VectorXd::Zero(offset_);
}

void Network::initialize(Rng& rng) {
    auto fill = [&](Eigen::Index off, Eigen::Index n, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (Eigen::Index i = 0; i < n; ++i) params_[off + i] = (2.0 * uniform01(rng) - 1.0) * bound;
    };
    if (spec_.recurrent()) {
        const Eigen::Index I = gru_.in;
        const Eigen::Index H = gru_.size;
        fill(gru_.wz, 3 * H * I, gru_.in);
        fill(gru_.uz, 3 * H * H + 3 * H, gru_.size);
    }
    for (const auto* layers : {&trunk_, &value_, &advantage_}) {
        for (const auto& d : *layers) {
            fill(d.w, static_cast<Eigen::Index>(d.in) * d.out, d.in);
            fill(d.b, d.out, d.in);
        }
    }
}

MatrixXd Network::run_mlp(const std::vector<Dense>& layers, const MatrixXd& x,
                          std::vector<MatrixXd>* cache) const {
    MatrixXd a = x;
    if (cache) cache->push_back(a);
    for (const auto& d : layers) {
        CMap w(params_.data() + d.w, d.out, d.in);
        Eigen::Map<const VectorXd> b(params_.data() + d.b, d.out);
        MatrixXd z = w * a;
        z.colwise() += b;
        if (d.activated) {
            if (spec_.activation == Activation::relu)
                z = z.cwiseMax(0.0);
            else
                z = z.array().tanh().matrix();
        }
        a = std::move(z);
        if (cache) cache->push_back(a);
    }
    return a;
}

MatrixXd Network::back_mlp(const std::vector<Dense>& layers, const std::vector<MatrixXd>& cache, MatrixXd d,
                           VectorXd& grad) const {
    for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
        const Dense& L = layers[i];
        const MatrixXd& out = cache[i + 1];
        if (L.activated) {
            if (spec_.activation == Activation::relu)
                d = (out.array() > 0.0).select(d, 0.0);
            else
                d = (d.array() * (1.0 - out.array().square())).matrix();
        }
        const MatrixXd& in = cache[i];
        Map(grad.data() + L.w, L.out, L.in).noalias() += d * in.transpose();
        Eigen::Map<VectorXd>(grad.data() + L.b, L.out) += d.rowwise().sum();
        CMap w(params_.data() + L.w, L.out, L.in);
        d = w.transpose() * d;
    }
    return d;
}

MatrixXd Network::gru_forward(const MatrixXd& x, const MatrixXd& h0, Cache* cache) const {
    const Eigen::Index I = gru_.in;
    const Eigen::Index H = gru_.size;
    const Eigen::Index B = x.cols();
    if (x.rows() % I != 0) throw std::invalid_argument("recurrent input rows must be a multiple of input_size");
    const Eigen::Index steps = x.rows() / I;
    MatrixXd h = h0.size() ? h0 : MatrixXd::Zero(H, B);
    if (h.rows() != H || h.cols() != B) throw std::invalid_argument("initial hidden state has wrong shape");
    CMap wz(params_.data() + gru_.wz, H, I), wr(params_.data() + gru_.wr, H, I), wn(params_.data() + gru_.wn, H, I);
    CMap uz(params_.data() + gru_.uz, H, H), ur(params_.data() + gru_.ur, H, H), un(params_.data() + gru_.un, H, H);
    Eigen::Map<const VectorXd> bz(params_.data() + gru_.bz, H), br(params_.data() + gru_.br, H),
        bn(params_.data() + gru_.bn, H);
    for (Eigen::Index t = 0; t < steps; ++t) {
        const MatrixXd xt = x.middleRows(t * I, I);
        MatrixXd az = wz * xt + uz * h;
        az.colwise() += bz;
        MatrixXd ar = wr * xt + ur * h;
        ar.colwise() += br;
        const MatrixXd z = sigmoid(az);
        const MatrixXd r = sigmoid(ar);
        MatrixXd an = wn * xt + un * (r.cwiseProduct(h));
        an.colwise() += bn;
        const MatrixXd n = an.array().tanh().matrix();
        if (cache) {
            cache->gru_x.push_back(xt);
            cache->gru_h.push_back(h);
            cache->gru_z.push_back(z);
            cache->gru_r.push_back(r);
            cache->gru_n.push_back(n);
        }
        h = ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();
    }
    return h;
}

void Network::gru_backward(const Cache& c, MatrixXd dh, VectorXd& grad) const {
    const Eigen::Index I = gru_.in;
    const Eigen::Index H = gru_.size;
    CMap uz(params_.data() + gru_.uz, H, H), ur(params_.data() + gru_.ur, H, H), un(params_.data() + gru_.un, H, H);
    Map gwz(grad.data() + gru_.wz, H, I), gwr(grad.data() + gru_.wr, H, I), gwn(grad.data() + gru_.wn, H, I);
    Map guz(grad.data() + gru_.uz, H, H), gur(grad.data() + gru_.ur, H, H), gun(grad.data() + gru_.un, H, H);
    Eigen::Map<VectorXd> gbz(grad.data() + gru_.bz, H), gbr(grad.data() + gru_.br, H), gbn(grad.data() + gru_.bn, H);
    for (int t = static_cast<int>(c.gru_x.size()) - 1; t >= 0; --t) {
        const MatrixXd& x = c.gru_x[t];
        const MatrixXd& hp = c.gru_h[t];
        const MatrixXd& z = c.gru_z[t];
        const MatrixXd& r = c.gru_r[t];
        const MatrixXd& n = c.gru_n[t];
        const MatrixXd rh = r.cwiseProduct(hp);

        const MatrixXd dn = (dh.array() * (1.0 - z.array())).matrix();
        const MatrixXd dz = (dh.array() * (hp.array() - n.array())).matrix();
        MatrixXd dhp = dh.cwiseProduct(z);

        const MatrixXd dan = (dn.array() * (1.0 - n.array().square())).matrix();
        gwn.noalias() += dan * x.transpose();
        gun.noalias() += dan * rh.transpose();
        gbn += dan.rowwise().sum();
        const MatrixXd drh = un.transpose() * dan;
        const MatrixXd dr = drh.cwiseProduct(hp);
        dhp += drh.cwiseProduct(r);

        const MatrixXd daz = (dz.array() * z.array() * (1.0 - z.array())).matrix();
        const MatrixXd dar = (dr.array() * r.array() * (1.0 - r.array())).matrix();
        gwz.noalias() += daz * x.transpose();
        guz.noalias() += daz * hp.transpose();
        gbz += daz.rowwise().sum();
        gwr.noalias() += dar * x.transpose();
        gur.noalias() += dar * hp.transpose();
        gbr += dar.rowwise().sum();
        dhp.noalias() += uz.transpose() * daz + ur.transpose() * dar;
        dh = std::move(dhp);
    }
}

MatrixXd Network::forward(const MatrixXd& x, const MatrixXd& h0) const {
    Cache unused;
    return forward(x, h0, unused);
}

MatrixXd Network::forward(const MatrixXd& x, const MatrixXd& h0, Cache& cache) const {
    if (x.rows() != spec_.input_rows())
        throw std::invalid_argument("network input has " + std::to_string(x.rows()) + " rows, expected " +
                                    std::to_string(spec_.input_rows()));
    cache = Cache{};
    const MatrixXd features = spec_.recurrent() ? gru_forward(x, h0, &cache) : x;
    cache.trunk_out = run_mlp(trunk_, features, &cache.trunk);
    if (!spec_.dueling) return run_mlp(advantage_, cache.trunk_out, &cache.advantage);
    const MatrixXd v = run_mlp(value_, cache.trunk_out, &cache.value);
    MatrixXd q = run_mlp(advantage_, cache.trunk_out, &cache.advantage);
    const Eigen::RowVectorXd shift = v.row(0) - q.colwise().mean();
    q.rowwise() += shift;
    return q;
}

VectorXd Network::backward(const Cache& cache, const MatrixXd& d_out) const {
    VectorXd grad;
    backward(cache, d_out, grad);
    return grad;
}

void Network::backward(const Cache& cache, const MatrixXd& d_out, VectorXd& grad) const {
    grad.setZero(params_.size());
    MatrixXd dt;
    if (spec_.dueling) {
        const MatrixXd dv = d_out.colwise().sum();
        MatrixXd da = d_out;
        da.rowwise() -= d_out.colwise().mean();
        dt = back_mlp(value_, cache.value, dv, grad);
        dt += back_mlp(advantage_, cache.advantage, da, grad);
    } else {
        dt = back_mlp(advantage_, cache.advantage, d_out, grad);
    }
    MatrixXd dh = back_mlp(trunk_, cache.trunk, dt, grad);
    if (spec_.recurrent()) gru_backward(cache, std::move(dh), grad);
}

VectorXd Network::recurrent_step(const VectorXd& h, const VectorXd& obs) const {
    if (!spec_.recurrent()) throw std::logic_error("network has no recurrent layer");
    MatrixXd h0 = h.size() ? MatrixXd(h) : MatrixXd::Zero(gru_.size, 1);
    return gru_forward(obs, h0, nullptr).col(0);
}

void soft_update(VectorXd& target, const VectorXd& online, double psi) {
    if (target.size() != online.size()) throw std::invalid_argument("soft_update shape mismatch");
    if (!(psi >= 0.0 && psi <= 1.0)) throw std::domain_error("psi must lie in [0, 1]");
    target = psi * online + (1.0 - psi) * target;
}

double gradient_check(const Network& net, const MatrixXd& x, const MatrixXd& weights, double step,
                      const MatrixXd& h0) {
    Network::Cache cache;
    net.forward(x, h0, cache);
    const VectorXd bp = net.backward(cache, weights);
    Network probe = net;
    VectorXd fd(bp.size());
    for (Eigen::Index i = 0; i < bp.size(); ++i) {
        const double orig = probe.params()[i];
        probe.params()[i] = orig + step;
        const double up = probe.forward(x, h0).cwiseProduct(weights).sum();
        probe.params()[i] = orig - step;
        const double down = probe.forward(x, h0).cwiseProduct(weights).sum();
        probe.params()[i] = orig;
        fd[i] = (up - down) / (2.0 * step);
    }
    const double scale = std::max({bp.norm(), fd.norm(), 1e-300});
    return (bp - fd).norm() / scale;
}

}  // namespace aoi::drl
