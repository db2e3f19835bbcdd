#ifndef TIV_ADAM_HPP
#define TIV_ADAM_HPP

#include <cmath>
#include <map>
#include <string>

#include "tiv/errors.hpp"
#include "tiv/nn.hpp"

namespace tiv {

struct AdamConfig {
    double lr = 0.0005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moment state is keyed by parameter name so it
// can be checkpointed and rebound on resume.
class Adam {
public:
    Adam(nn::ParamRefs params, AdamConfig cfg = {}) : params_(std::move(params)), cfg_(cfg) {
        for (auto& [name, t] : params_) {
            m_[name] = nn::Vec::Zero(t->size());
            v_[name] = nn::Vec::Zero(t->size());
        }
    }

    // lr_scale supports schedules (e.g. the final-epoch x0.1 drop).
    void step(double lr_scale = 1.0) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        const double lr = cfg_.lr * lr_scale;
        for (auto& [name, p] : params_) {
            nn::Vec& m = m_[name];
            nn::Vec& v = v_[name];
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * p->g;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * p->g.cwiseProduct(p->g);
            p->v.array() -=
                lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.eps);
        }
    }

    long steps() const { return t_; }

    // checkpoint support
    std::map<std::string, nn::Vec> state() const {
        std::map<std::string, nn::Vec> s;
        for (const auto& [name, vec] : m_) s["adam.m." + name] = vec;
        for (const auto& [name, vec] : v_) s["adam.v." + name] = vec;
        return s;
    }

    void restore(const std::map<std::string, nn::Vec>& s, long steps) {
        for (auto& [name, vec] : m_) {
            const auto it = s.find("adam.m." + name);
            if (it == s.end()) throw DataError("adam: missing state for " + name);
            if (it->second.size() != vec.size())
                throw DataError("adam: state size mismatch for " + name);
            vec = it->second;
        }
        for (auto& [name, vec] : v_) {
            const auto it = s.find("adam.v." + name);
            if (it == s.end()) throw DataError("adam: missing state for " + name);
            vec = it->second;
        }
        t_ = steps;
    }

private:
    nn::ParamRefs params_;
    AdamConfig cfg_;
    std::map<std::string, nn::Vec> m_, v_;
    long t_ = 0;
};

}  // namespace tiv

#endif
