#ifndef TIV_NN_HPP
#define TIV_NN_HPP

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tiv/errors.hpp"
#include "tiv/rng.hpp"

namespace tiv::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Named parameter tensor: flat values plus an accumulated gradient.
struct Tensor {
    std::vector<int> shape;
    Vec v;
    Vec g;

    void resize(std::vector<int> s) {
        shape = std::move(s);
        long n = 1;
        for (int d : shape) n *= d;
        v = Vec::Zero(n);
        g = Vec::Zero(n);
    }
    long size() const { return v.size(); }
};

using ParamRefs = std::vector<std::pair<std::string, Tensor*>>;

inline void zero_grads(const ParamRefs& params) {
    for (auto& [name, t] : params) t->g.setZero();
}

// theta_k <- m * theta_k + (1 - m) * theta_q, elementwise over aligned tensors.
inline void momentum_update(const ParamRefs& query, const ParamRefs& key, double m) {
    if (query.size() != key.size())
        throw ContractError("momentum_update: parameter collections differ in length");
    for (std::size_t i = 0; i < query.size(); ++i) {
        if (query[i].second->size() != key[i].second->size())
            throw ContractError("momentum_update: shape mismatch at " + query[i].first);
        key[i].second->v = m * key[i].second->v + (1.0 - m) * query[i].second->v;
    }
}

// Batch of feature maps, N x C x H x W, flat row-major.
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    Vec data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), data(Vec::Zero(static_cast<long>(n_) * c_ * h_ * w_)) {}

    long idx(int in, int ic, int iy, int ix) const {
        return ((static_cast<long>(in) * c + ic) * h + iy) * w + ix;
    }
    double& at(int in, int ic, int iy, int ix) { return data[idx(in, ic, iy, ix)]; }
    double at(int in, int ic, int iy, int ix) const { return data[idx(in, ic, iy, ix)]; }
    long size() const { return data.size(); }
};

// --- layers -----------------------------------------------------------------
// forward(x, train) caches what backward needs when train is set; backward
// returns the input gradient and accumulates parameter gradients.

class Conv2d {
public:
    Conv2d(int cin, int cout, int kernel, int stride, int pad)
        : cin_(cin), cout_(cout), k_(kernel), stride_(stride), pad_(pad) {
        weight.resize({cout, cin, kernel, kernel});
        bias.resize({cout});
    }

    void init(Rng& rng) {
        const double std = std::sqrt(2.0 / (static_cast<double>(cin_) * k_ * k_));
        for (long i = 0; i < weight.size(); ++i) weight.v[i] = rng.normal(0.0, std);
        bias.v.setZero();
    }

    int out_dim(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

    Tensor4 forward(const Tensor4& x, bool train) {
        if (x.c != cin_) throw ContractError("Conv2d: channel mismatch");
        const int ho = out_dim(x.h), wo = out_dim(x.w);
        if (ho < 1 || wo < 1) throw ContractError("Conv2d: input too small");
        Mat cols = im2col(x, ho, wo);
        Eigen::Map<const Mat> wmat(weight.v.data(), k_ * k_ * cin_, cout_);
        Mat y = wmat.transpose() * cols;  // cout x (n*ho*wo)
        y.colwise() += Eigen::Map<const Vec>(bias.v.data(), cout_);

        Tensor4 out(x.n, cout_, ho, wo);
        to_tensor(y, out);
        if (train) {
            cols_ = std::move(cols);
            in_shape_ = {x.n, x.h, x.w};
        }
        return out;
    }

    Tensor4 backward(const Tensor4& dy) {
        const int n = in_shape_[0], hin = in_shape_[1], win = in_shape_[2];
        Mat dy_mat = from_tensor(dy);  // cout x (n*ho*wo)
        Eigen::Map<Mat> wgrad(weight.g.data(), k_ * k_ * cin_, cout_);
        wgrad.noalias() += cols_ * dy_mat.transpose();
        Eigen::Map<Vec>(bias.g.data(), cout_) += dy_mat.rowwise().sum();

        Eigen::Map<const Mat> wmat(weight.v.data(), k_ * k_ * cin_, cout_);
        Mat dcols = wmat * dy_mat;  // (cin*k*k) x (n*ho*wo)
        return col2im(dcols, n, hin, win, dy.h, dy.w);
    }

    ParamRefs params(const std::string& prefix) {
        return {{prefix + ".weight", &weight}, {prefix + ".bias", &bias}};
    }

    Tensor weight, bias;

private:
    // column j = ((n*ho + oy)*wo + ox); row r = (c*k + ky)*k + kx
    Mat im2col(const Tensor4& x, int ho, int wo) const {
        Mat cols = Mat::Zero(static_cast<long>(cin_) * k_ * k_, static_cast<long>(x.n) * ho * wo);
        for (int in = 0; in < x.n; ++in)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    const long col = (static_cast<long>(in) * ho + oy) * wo + ox;
                    for (int ic = 0; ic < cin_; ++ic)
                        for (int ky = 0; ky < k_; ++ky) {
                            const int iy = oy * stride_ - pad_ + ky;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int kx = 0; kx < k_; ++kx) {
                                const int ix = ox * stride_ - pad_ + kx;
                                if (ix < 0 || ix >= x.w) continue;
                                cols((static_cast<long>(ic) * k_ + ky) * k_ + kx, col) =
                                    x.at(in, ic, iy, ix);
                            }
                        }
                }
        return cols;
    }

    Tensor4 col2im(const Mat& dcols, int n, int hin, int win, int ho, int wo) const {
        Tensor4 dx(n, cin_, hin, win);
        for (int in = 0; in < n; ++in)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    const long col = (static_cast<long>(in) * ho + oy) * wo + ox;
                    for (int ic = 0; ic < cin_; ++ic)
                        for (int ky = 0; ky < k_; ++ky) {
                            const int iy = oy * stride_ - pad_ + ky;
                            if (iy < 0 || iy >= hin) continue;
                            for (int kx = 0; kx < k_; ++kx) {
                                const int ix = ox * stride_ - pad_ + kx;
                                if (ix < 0 || ix >= win) continue;
                                dx.at(in, ic, iy, ix) +=
                                    dcols((static_cast<long>(ic) * k_ + ky) * k_ + kx, col);
                            }
                        }
                }
        return dx;
    }

    void to_tensor(const Mat& y, Tensor4& out) const {
        for (int in = 0; in < out.n; ++in)
            for (int co = 0; co < cout_; ++co)
                for (int oy = 0; oy < out.h; ++oy)
                    for (int ox = 0; ox < out.w; ++ox)
                        out.at(in, co, oy, ox) =
                            y(co, (static_cast<long>(in) * out.h + oy) * out.w + ox);
    }

    Mat from_tensor(const Tensor4& t) const {
        Mat m(cout_, static_cast<long>(t.n) * t.h * t.w);
        for (int in = 0; in < t.n; ++in)
            for (int co = 0; co < cout_; ++co)
                for (int oy = 0; oy < t.h; ++oy)
                    for (int ox = 0; ox < t.w; ++ox)
                        m(co, (static_cast<long>(in) * t.h + oy) * t.w + ox) =
                            t.at(in, co, oy, ox);
        return m;
    }

    int cin_, cout_, k_, stride_, pad_;
    Mat cols_;
    std::array<int, 3> in_shape_ = {};
};

// Per-sample, per-channel normalization over spatial positions. Uses no batch
// statistics, so results do not depend on batch composition.
class InstanceNorm {
public:
    explicit InstanceNorm(double eps = 1e-5) : eps_(eps) {}

    Tensor4 forward(const Tensor4& x, bool train) {
        Tensor4 out(x.n, x.c, x.h, x.w);
        const int p = x.h * x.w;
        if (train) {
            xhat_ = Tensor4(x.n, x.c, x.h, x.w);
            inv_std_.assign(static_cast<std::size_t>(x.n) * x.c, 0.0);
        }
        for (int in = 0; in < x.n; ++in)
            for (int ic = 0; ic < x.c; ++ic) {
                const long base = x.idx(in, ic, 0, 0);
                double mean = 0.0;
                for (int i = 0; i < p; ++i) mean += x.data[base + i];
                mean /= p;
                double var = 0.0;
                for (int i = 0; i < p; ++i) {
                    const double d = x.data[base + i] - mean;
                    var += d * d;
                }
                var /= p;
                const double inv = 1.0 / std::sqrt(var + eps_);
                for (int i = 0; i < p; ++i) out.data[base + i] = (x.data[base + i] - mean) * inv;
                if (train) {
                    for (int i = 0; i < p; ++i) xhat_.data[base + i] = out.data[base + i];
                    inv_std_[static_cast<std::size_t>(in) * x.c + ic] = inv;
                }
            }
        return out;
    }

    Tensor4 backward(const Tensor4& dy) {
        Tensor4 dx(dy.n, dy.c, dy.h, dy.w);
        const int p = dy.h * dy.w;
        for (int in = 0; in < dy.n; ++in)
            for (int ic = 0; ic < dy.c; ++ic) {
                const long base = dy.idx(in, ic, 0, 0);
                double g_mean = 0.0, gx_mean = 0.0;
                for (int i = 0; i < p; ++i) {
                    g_mean += dy.data[base + i];
                    gx_mean += dy.data[base + i] * xhat_.data[base + i];
                }
                g_mean /= p;
                gx_mean /= p;
                const double inv = inv_std_[static_cast<std::size_t>(in) * dy.c + ic];
                for (int i = 0; i < p; ++i)
                    dx.data[base + i] =
                        inv * (dy.data[base + i] - g_mean - xhat_.data[base + i] * gx_mean);
            }
        return dx;
    }

private:
    double eps_;
    Tensor4 xhat_;
    std::vector<double> inv_std_;
};

class ReLU {
public:
    Tensor4 forward(const Tensor4& x, bool train) {
        Tensor4 out = x;
        for (long i = 0; i < out.size(); ++i)
            if (out.data[i] < 0.0) out.data[i] = 0.0;
        if (train) mask_ = x;
        return out;
    }

    Tensor4 backward(const Tensor4& dy) {
        Tensor4 dx = dy;
        for (long i = 0; i < dx.size(); ++i)
            if (mask_.data[i] <= 0.0) dx.data[i] = 0.0;
        return dx;
    }

private:
    Tensor4 mask_;
};

class GlobalAvgPool {
public:
    // N x C x H x W -> N x C
    Mat forward(const Tensor4& x, bool train) {
        if (train) spatial_ = {x.h, x.w};
        Mat out(x.n, x.c);
        const int p = x.h * x.w;
        for (int in = 0; in < x.n; ++in)
            for (int ic = 0; ic < x.c; ++ic) {
                const long base = x.idx(in, ic, 0, 0);
                double acc = 0.0;
                for (int i = 0; i < p; ++i) acc += x.data[base + i];
                out(in, ic) = acc / p;
            }
        return out;
    }

    Tensor4 backward(const Mat& dy) {
        const int h = spatial_[0], w = spatial_[1];
        Tensor4 dx(static_cast<int>(dy.rows()), static_cast<int>(dy.cols()), h, w);
        const double scale = 1.0 / (h * w);
        for (int in = 0; in < dx.n; ++in)
            for (int ic = 0; ic < dx.c; ++ic) {
                const long base = dx.idx(in, ic, 0, 0);
                for (int i = 0; i < h * w; ++i) dx.data[base + i] = dy(in, ic) * scale;
            }
        return dx;
    }

private:
    std::array<int, 2> spatial_ = {};
};

class Linear {
public:
    Linear(int in, int out) : in_(in), out_(out) {
        weight.resize({out, in});
        bias.resize({out});
    }

    void init(Rng& rng) {
        const double std = std::sqrt(2.0 / in_);
        for (long i = 0; i < weight.size(); ++i) weight.v[i] = rng.normal(0.0, std);
        bias.v.setZero();
    }

    // x: N x in -> N x out
    Mat forward(const Mat& x, bool train) {
        if (x.cols() != in_) throw ContractError("Linear: input dimension mismatch");
        Eigen::Map<const Mat> w(weight.v.data(), in_, out_);  // column-major (out x in) transposed
        Mat y = x * w;
        y.rowwise() += Eigen::Map<const Vec>(bias.v.data(), out_).transpose();
        if (train) x_ = x;
        return y;
    }

    Mat backward(const Mat& dy) {
        Eigen::Map<Mat> wg(weight.g.data(), in_, out_);
        wg.noalias() += x_.transpose() * dy;
        Eigen::Map<Vec>(bias.g.data(), out_) += dy.colwise().sum().transpose();
        Eigen::Map<const Mat> w(weight.v.data(), in_, out_);
        return dy * w.transpose();
    }

    ParamRefs params(const std::string& prefix) {
        return {{prefix + ".weight", &weight}, {prefix + ".bias", &bias}};
    }

    Tensor weight, bias;

private:
    int in_, out_;
    Mat x_;
};

// ReLU over a dense activation matrix (for MLP heads).
class DenseReLU {
public:
    Mat forward(const Mat& x, bool train) {
        Mat out = x.cwiseMax(0.0);
        if (train) mask_ = x;
        return out;
    }
    Mat backward(const Mat& dy) {
        return (mask_.array() > 0.0).select(dy, Mat::Zero(dy.rows(), dy.cols()));
    }

private:
    Mat mask_;
};

// Row-wise projection onto the unit sphere.
class L2NormalizeRows {
public:
    Mat forward(const Mat& x, bool train) {
        Mat y = x;
        Vec norms(x.rows());
        for (long i = 0; i < x.rows(); ++i) {
            const double n = std::max(x.row(i).norm(), 1e-12);
            norms[i] = n;
            y.row(i) /= n;
        }
        if (train) {
            y_ = y;
            norms_ = norms;
        }
        return y;
    }

    Mat backward(const Mat& dy) {
        Mat dx = dy;
        for (long i = 0; i < dy.rows(); ++i) {
            const double dot = y_.row(i).dot(dy.row(i));
            dx.row(i) = (dy.row(i) - y_.row(i) * dot) / norms_[i];
        }
        return dx;
    }

private:
    Mat y_;
    Vec norms_;
};

}  // namespace tiv::nn

#endif
