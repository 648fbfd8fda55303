#include "tmr/segmenter/focal_loss.hpp"

#include <cmath>
#include <stdexcept>

namespace tmr::segmenter {

namespace {
constexpr double kProbFloor = 1e-7;

void check_domain(double p_t, double gamma, double alpha) {
    if (p_t <= 0.0) throw std::domain_error("focal_loss: p_t must be > 0");
    if (p_t > 1.0) throw std::domain_error("focal_loss: p_t must be <= 1");
    if (gamma < 0.0) throw std::invalid_argument("focal_loss: gamma must be >= 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("focal_loss: alpha in (0,1]");
}
}  // namespace

double focal_loss(double p_t, double gamma, double alpha) {
    check_domain(p_t, gamma, alpha);
    double p = std::max(p_t, kProbFloor);
    return -alpha * std::pow(1.0 - p, gamma) * std::log(p);
}

double focal_loss_grad(double p_t, double gamma, double alpha) {
    check_domain(p_t, gamma, alpha);
    double p = std::max(p_t, kProbFloor);
    double one_m = 1.0 - p;
    double term_log = gamma > 0.0 ? gamma * std::pow(one_m, gamma - 1.0) * std::log(p) : 0.0;
    return alpha * (term_log - std::pow(one_m, gamma) / p);
}

double focal_loss_with_logits(const nn::Tensor& logits, const nn::Tensor& targets, double gamma,
                              double alpha, nn::Tensor& dlogits) {
    if (!logits.same_shape(targets)) throw std::invalid_argument("focal loss: shape mismatch");
    dlogits = nn::Tensor(logits.n, logits.c, logits.h, logits.w);
    const double inv_count = 1.0 / double(logits.size());
    double total = 0.0;
    for (size_t i = 0; i < logits.v.size(); ++i) {
        double z = logits.v[i];
        double y = targets.v[i];
        // numerically stable sigmoid
        double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        double a_t = y > 0.5 ? alpha : 1.0 - alpha;
        double p_t = y > 0.5 ? p : 1.0 - p;
        double pc = std::max(p_t, kProbFloor);
        double one_m = 1.0 - pc;
        total += -a_t * std::pow(one_m, gamma) * std::log(pc);

        double dL_dpt;
        if (pc >= 1.0 - 1e-12) {
            dL_dpt = gamma > 0.0 ? 0.0 : -a_t;  // limit as p_t -> 1
        } else {
            double term_log = gamma > 0.0 ? gamma * std::pow(one_m, gamma - 1.0) * std::log(pc) : 0.0;
            dL_dpt = a_t * (term_log - std::pow(one_m, gamma) / pc);
        }
        double dpt_dz = p * (1.0 - p) * (y > 0.5 ? 1.0 : -1.0);
        dlogits.v[i] = float(dL_dpt * dpt_dz * inv_count);
    }
    return total * inv_count;
}

}  // namespace tmr::segmenter
