#include "finsler/numeric_jet.hpp"

#include "finsler/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace finsler {

namespace {

constexpr double kNoiseFactor = 1e4;

} // namespace

VectorJetValue directional_jet(const DirectionalJetRequest& req)
{
    const int k = static_cast<int>(req.directions.size());
    if (k < 1 || k > 3) throw InvalidArgument("directional_jet: between one and three directions required");
    if (req.levels < 1) throw InvalidArgument("directional_jet: at least one level required");
    if (!(req.relative_step > 0.0)) throw InvalidArgument("directional_jet: step must be positive");
    const double scale = std::max(1.0, req.base.cwiseAbs().maxCoeff());
    const double h0 = req.relative_step * scale;
    const double eps = std::numeric_limits<double>::epsilon();
    if (h0 <= std::pow(eps, 1.0 / (k + 1)) * scale) {
        throw InvalidArgument("directional_jet: step below the cancellation limit");
    }

    // Unit directions; the derivative is multilinear in them.
    std::vector<Eigen::VectorXd> unit;
    double magnitude = 1.0;
    for (const auto& d : req.directions) {
        if (d.size() != req.base.size()) throw InvalidArgument("directional_jet: direction has wrong size");
        const double n = d.norm();
        magnitude *= n;
        unit.push_back(n > 0.0 ? Eigen::VectorXd(d / n) : Eigen::VectorXd(d));
    }

    const Eigen::VectorXd f0 = req.target(req.base);
    if (magnitude == 0.0) {
        return {Eigen::VectorXd::Zero(f0.size()), Eigen::VectorXd::Zero(f0.size())};
    }

    std::vector<Eigen::VectorXd> raw;
    double fmax = f0.cwiseAbs().maxCoeff();
    for (int level = 0; level < req.levels; ++level) {
        const double h = h0 / std::pow(2.0, level);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(f0.size());
        for (int mask = 0; mask < (1 << k); ++mask) {
            Eigen::VectorXd p = req.base;
            double sign = 1.0;
            for (int i = 0; i < k; ++i) {
                const double s = (mask >> i & 1) ? -1.0 : 1.0;
                sign *= s;
                p += s * h * unit[i];
            }
            if (req.domain && !req.domain(p)) {
                throw StencilOutsideDomain("numeric jet stencil leaves the domain");
            }
            const Eigen::VectorXd fp = req.target(p);
            fmax = std::max(fmax, fp.cwiseAbs().maxCoeff());
            acc += sign * fp;
        }
        raw.push_back(acc / std::pow(2.0 * h, k));
    }

    const double h_last = h0 / std::pow(2.0, req.levels - 1);
    const double noise = kNoiseFactor * eps * fmax * (1 << k) / std::pow(2.0 * h_last, k);
    if (req.levels >= 3) {
        const double d1 = (raw[1] - raw[0]).cwiseAbs().maxCoeff();
        const double d2 = (raw[2] - raw[1]).cwiseAbs().maxCoeff();
        if (d2 > 0.5 * d1 && d2 > noise) {
            throw NoisyDerivative("Richardson levels do not contract");
        }
    }

    // Richardson tableau on an even error expansion in h.
    std::vector<std::vector<Eigen::VectorXd>> table(req.levels);
    for (int l = 0; l < req.levels; ++l) {
        table[l].push_back(raw[l]);
        double factor = 1.0;
        for (int j = 1; j <= l; ++j) {
            factor *= 4.0;
            table[l].push_back(table[l][j - 1] + (table[l][j - 1] - table[l - 1][j - 1]) / (factor - 1.0));
        }
    }
    const auto& last = table.back();
    VectorJetValue out;
    out.value = magnitude * last.back();
    if (last.size() >= 2) {
        out.error = magnitude * (last.back() - last[last.size() - 2]).cwiseAbs();
    } else {
        out.error = Eigen::VectorXd::Constant(f0.size(), magnitude * noise);
    }
    out.error.array() += magnitude * noise / kNoiseFactor;
    return out;
}

JetValue numeric_jet(const JetRequest& req)
{
    const int n = static_cast<int>(req.base.size());
    if (static_cast<int>(req.multi_index.size()) != n) {
        throw InvalidArgument("numeric_jet: multi-index length must match the point dimension");
    }
    DirectionalJetRequest dreq;
    dreq.target = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd out(1);
        out[0] = req.target(p);
        return out;
    };
    dreq.base = req.base;
    for (int a = 0; a < n; ++a) {
        if (req.multi_index[a] < 0) throw InvalidArgument("numeric_jet: negative derivative order");
        for (int r = 0; r < req.multi_index[a]; ++r) dreq.directions.push_back(Eigen::VectorXd::Unit(n, a));
    }
    const int total = std::accumulate(req.multi_index.begin(), req.multi_index.end(), 0);
    if (total < 1 || total > 3) throw InvalidArgument("numeric_jet: total order must be 1, 2 or 3");
    dreq.relative_step = req.relative_step;
    dreq.levels = req.levels;
    dreq.domain = req.domain;
    const auto v = directional_jet(dreq);
    return {v.value[0], v.error[0]};
}

} // namespace finsler
