#include "devtox/diagnostics.hpp"

#include "devtox/inference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace devtox {

namespace {

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x, double mean) {
    if (x.size() < 2) return 0.0;
    double s = 0.0;
    for (double v : x) s += (v - mean) * (v - mean);
    return s / static_cast<double>(x.size() - 1);
}

bool is_constant(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

}  // namespace

double effective_sample_size(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 4 || is_constant(x)) return static_cast<double>(n);
    const double mu = mean_of(x);
    auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - mu) * (x[t + lag] - mu);
        return s / static_cast<double>(n);
    };
    const double c0 = autocov(0);
    // Sum of consecutive autocorrelation pairs, truncated at the first
    // negative pair and forced monotone.
    double sum = 0.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
        double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        prev_pair = pair;
        sum += pair;
    }
    const double tau = std::max(2.0 * sum - 1.0, 1e-12);
    return std::min(static_cast<double>(n) / tau, static_cast<double>(n) * std::log10(static_cast<double>(n)));
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
    std::vector<std::span<const double>> halves;
    for (const auto& c : chains) {
        const std::size_t h = c.size() / 2;
        if (h < 2) continue;
        halves.emplace_back(c.data(), h);
        halves.emplace_back(c.data() + (c.size() - h), h);
    }
    if (halves.empty()) return std::nan("");
    const std::size_t n = halves.front().size();
    std::vector<double> means;
    double w = 0.0;
    for (auto h : halves) {
        const double m = mean_of(h);
        means.push_back(m);
        w += variance_of(h, m);
    }
    w /= static_cast<double>(halves.size());
    const double grand = mean_of(means);
    const double b = static_cast<double>(n) * variance_of(means, grand);
    if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    const double var_plus = (n - 1.0) / n * w + b / n;
    return std::sqrt(var_plus / w);
}

std::vector<double> top_weights(std::vector<double> w, int k) {
    std::sort(w.begin(), w.end(), std::greater<>());
    w.resize(k, 0.0);
    return w;
}

Diagnostics diagnostics(std::span<const Chain> chains, double dose) {
    if (chains.empty() || chains.front().draws.empty()) throw std::invalid_argument("diagnostics: empty chain");
    const ModelSpec& spec = chains.front().spec;
    Diagnostics out;
    out.dose = dose;

    using Extract = std::function<double(const Draw&)>;
    std::vector<std::pair<std::string, Extract>> items;
    const Draw& first = chains.front().draws.front();
    if (first.mu) {
        for (int j = 0; j < 2; ++j) {
            const std::string s = std::to_string(j + 1);
            for (int c = 0; c < 2; ++c) {
                items.emplace_back("mu" + s + "[" + std::to_string(c) + "]",
                                   [j, c](const Draw& d) { return (*d.mu)[j](c); });
            }
            items.emplace_back("Sigma" + s + "[0,0]", [j](const Draw& d) { return (*d.Sigma)[j](0, 0); });
            items.emplace_back("Sigma" + s + "[0,1]", [j](const Draw& d) { return (*d.Sigma)[j](0, 1); });
            items.emplace_back("Sigma" + s + "[1,1]", [j](const Draw& d) { return (*d.Sigma)[j](1, 1); });
        }
    }
    if (first.params.sigma2) {
        for (int j = 0; j < 2; ++j) {
            items.emplace_back("sigma2_" + std::to_string(j + 1),
                               [j](const Draw& d) { return (*d.params.sigma2)[j]; });
        }
    }
    if (first.params.bb_lambda) {
        for (int j = 0; j < 2; ++j) {
            items.emplace_back("lambda" + std::to_string(j + 1),
                               [j](const Draw& d) { return (*d.params.bb_lambda)[j]; });
        }
    }
    if (spec.weights != WeightStructure::Single) {
        for (int k = 0; k < 4; ++k) {
            items.emplace_back("weight_top" + std::to_string(k + 1), [k, dose](const Draw& d) {
                return top_weights(d.params.weights_at(dose))[k];
            });
        }
    }
    for (int j = 0; j < 2; ++j) {
        for (int c = 0; c < 2; ++c) {
            items.emplace_back("beta_avg" + std::to_string(j + 1) + "[" + std::to_string(c) + "]",
                               [j, c](const Draw& d) { return d.beta_avg[j](c); });
        }
    }
    for (Endpoint e : kEndpoints) {
        items.emplace_back(std::string(to_string(e)), [e, dose, spec](const Draw& d) {
            return dose_response_draw(d.params, spec, dose).get(e);
        });
    }

    for (const auto& [name, fn] : items) {
        std::vector<std::vector<double>> per_chain;
        std::vector<double> pooled;
        double ess = 0.0;
        for (const auto& ch : chains) {
            std::vector<double> v;
            v.reserve(ch.draws.size());
            for (const auto& d : ch.draws) v.push_back(fn(d));
            ess += effective_sample_size(v);
            pooled.insert(pooled.end(), v.begin(), v.end());
            per_chain.push_back(std::move(v));
        }
        TraceSummary s;
        s.name = name;
        s.mean = mean_of(pooled);
        s.sd = std::sqrt(variance_of(pooled, s.mean));
        s.degenerate = is_constant(pooled);
        s.ess = s.degenerate ? static_cast<double>(pooled.size()) : ess;
        s.rhat = s.degenerate ? 1.0 : split_rhat(per_chain);
        out.names.push_back(name);
        out.traces.push_back(std::move(per_chain));
        out.summaries.push_back(std::move(s));
    }
    return out;
}

}  // namespace devtox
